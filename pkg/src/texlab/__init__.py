"""texlab: a desk-scale hybrid video codec lab with a texture coding mode.

Pipeline: CNN block texture segmentation, mask refinement, texture-region
affine motion estimation, and an encoder/decoder pair with tex-all /
tex-sp / tex-cp texture-mode schedules measured against a conventional
baseline.
"""

__version__ = "0.1.0"
