"""textrain: dataset preparation and training for the block texture classifier.

The exported TEXW1 weights file is the only coupling to the inference side;
its layout is specified in the codec lab's docs/texw1_format.md.
"""

__version__ = "0.1.0"
