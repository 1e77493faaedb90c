# errors.py - исключения библиотеки fuzzrate


class FuzzRateError(Exception):
    """Базовое исключение для всех ошибок fuzzrate."""


class DimensionError(FuzzRateError, ValueError):
    """Размерность точки не совпадает с размерностью функции или оператора."""


class MembershipError(FuzzRateError):
    """Некорректные параметры функции принадлежности или семейства."""


class OperatorError(FuzzRateError):
    """Некорректные параметры оператора."""


class RateError(FuzzRateError):
    """Ошибка при вычислении нечеткой скорости."""

    def __init__(self, message: str, residual: float = None):
        super().__init__(message)
        # Лучшая достигнутая невязка (для attained_witness)
        self.residual = residual


class DynamicsError(FuzzRateError):
    """Некорректные параметры орбиты или поиска квазинеподвижных точек."""


class DefinitionError(FuzzRateError):
    """Ошибка разбора определения семейства или оператора."""

    def __init__(self, message: str, field: str = None):
        super().__init__(message)
        # Имя поля, вызвавшего ошибку (выводится CLI)
        self.field = field
