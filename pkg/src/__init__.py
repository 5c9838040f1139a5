"""flowfilter: условные нормализующие потоки для оценки состояния динамических систем"""
