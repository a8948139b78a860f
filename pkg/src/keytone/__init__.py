"""keytone: category-adaptive color chart generation, simulated press
characterization, RGB-to-CMYK separation and pair-comparison evaluation."""

__version__ = "0.1.0"
