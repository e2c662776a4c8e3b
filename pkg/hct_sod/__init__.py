"""
HCT - Hierarchical Cross-modal Transformer for RGB-D salient object detection
"""
__version__ = "1.0.0"
