"""Incremental dimensionality reduction with a growing graph of coding vectors."""
from .edges import EdgeUpdateOutcome, curate_edges, neighbor_list, symmetrize
from .evaluation import (BlobSpec, adjusted_mutual_information, consecutive_displacement,
                         kmeans, make_blobs, pca_reduce)
from .growth import CapacityWarning, accumulate_growth, grow
from .io import (FormatError, ParseError, export_embedding, load_csv, load_idx, load_model,
                 save_model, write_csv)
from .layout import KernelParams, attract, layout_step, repulse
from .model import (DataMatrix, HyperParams, NeighborSet, SongModel, ValidationError,
                    init_model, quantization_error, transform)
from .neighbors import nearest_coding_vectors
from .organize import organize_coding_vectors
from .trainer import TrainReport, TrainingError, fit, partial_fit

__version__ = "0.1.0"
