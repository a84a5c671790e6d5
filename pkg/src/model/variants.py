"""Model variants.

S variants decode one view, D variants decode top and front from the same
context. The -disc variants add a patch discriminator per decoded view.
"""

from __future__ import annotations

from enum import Enum


class Variant(str, Enum):
    S = "s"
    S_DISC = "s-disc"
    D = "d"
    D_DISC = "d-disc"

    @property
    def dual(self) -> bool:
        return self in (Variant.D, Variant.D_DISC)

    @property
    def adversarial(self) -> bool:
        return self in (Variant.S_DISC, Variant.D_DISC)


VARIANT_CHOICES = [v.value for v in Variant]
