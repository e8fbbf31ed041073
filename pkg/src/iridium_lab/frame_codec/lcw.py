from dataclasses import dataclass

WIDTHS = (3, 2, 4, 21)


@dataclass(frozen=True)
class Lcw:
    payload_type: int = 0
    lcw_type: int = 0
    lcw_code: int = 0
    metadata: int = 0

    def __post_init__(self):
        for name, width in zip(("payload_type", "lcw_type", "lcw_code", "metadata"), WIDTHS):
            v = getattr(self, name)
            if not 0 <= v < 1 << width:
                raise ValueError(f"{name}={v} does not fit in {width} bits")


def encode_lcw(lcw):
    return (lcw.payload_type << 27) | (lcw.lcw_type << 25) | (lcw.lcw_code << 21) | lcw.metadata


def decode_lcw(packed):
    if not 0 <= packed < 1 << 30:
        raise ValueError("LCW must fit in 30 bits")
    return Lcw(packed >> 27, (packed >> 25) & 0x3, (packed >> 21) & 0xF, packed & 0x1FFFFF)
