"""Слой сервисов: алгоритмы модели, обучения, теории и данных, оркестрация экспериментов."""
