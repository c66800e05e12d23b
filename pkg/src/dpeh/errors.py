"""Exception hierarchy shared by every module of the package."""


class RDHError(Exception):
    """Base class for all data-hiding failures."""


class DimensionError(RDHError, ValueError):
    pass


class PGMDecodeError(RDHError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CapacityError(RDHError):
    """The requested bits cannot be carried by the cover."""

    def __init__(self, message: str, max_capacity: int | None = None):
        if max_capacity is not None:
            message = f"{message} (max achievable capacity {max_capacity} bits)"
        super().__init__(message)
        self.max_capacity = max_capacity


class InfeasibleError(CapacityError):
    """No expansion-bin selection reaches the capacity target."""


class AuxOverflowError(CapacityError):
    pass


class CorruptionError(RDHError):
    """Stego data failed a structural or integrity check."""


class SerializationError(RDHError, ValueError):
    def __init__(self, message: str, bit_offset: int | None = None):
        if bit_offset is not None:
            message = f"{message} (at bit offset {bit_offset})"
        super().__init__(message)
        self.bit_offset = bit_offset
