"""Gabor and Radon barcodes for content-based image retrieval."""
from .barcodes import (Barcode, DownsampleSpec, GaborDescriptor, RadonConfig, RadonDescriptor,
                       binarize_median, downsample, gbc, parse_tag, radon_projections, rbc)
from .gabor import GaborBankConfig, GaborKernel, GaborParams, convolve, magnitude, make_bank, make_kernel
from .imaging import GrayImage, load_image, normalize
from .index import BarcodeIndex, IndexEntry, build_index, load_index, save_index, similarity
from .irma import (BranchTable, EvalRecord, IrmaCode, build_branch_table, delta, eta_suitability,
                   pair_error, parse_irma, total_error)

__version__ = "0.1.0"
