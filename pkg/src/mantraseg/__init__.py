"""mantraseg: open-vocabulary point cloud segmentation toolkit.

Label names are embedded by a frozen text encoder into a shared latent
space; point embeddings are trained to align with those anchors, so
heterogeneous datasets train jointly and inference accepts arbitrary
vocabularies.
"""

__version__ = "0.1.0"
