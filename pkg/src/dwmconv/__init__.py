"""Decomposable Winograd convolution: exact transform generation, kernel
decomposition, forward/backward engines, a FLOP model and benchmark tools."""

from .bench import (AccuracyConfig, AccuracyReport, AccuracyRow, LayerReport,
                    LayerSpec, NetworkSpec, analyze_network, check_accuracy_bands,
                    load_network, network_report_csv, run_accuracy_suite,
                    run_flops_suite)
from .convspec import ConvSpec
from .decompose import (AxisPart, DecompositionPlan, KernelPart,
                        input_region_for_part, plan_decomposition, plan_to_json,
                        split_axis_by_stride, split_by_size)
from .engines import (ConvOutput, FlopCounter, convolve, direct_conv2d,
                      dwm_backward, dwm_conv2d, winograd_conv2d,
                      winograd_grad_data, winograd_grad_weight)
from .flops import (FlopReport, flops_direct, flops_dwm, flops_winograd_classic,
                    is_shift_free, reports_to_csv, reports_to_json, speedup_table)
from .tensor import accumulate, mse, pad_input, slice_strided
from .tensorfile import read_tensor, write_tensor
from .transforms import (NumericTransformSet, TransformSet, VerifyResult,
                         apply_exact, cook_toom, correlate_exact, default_points,
                         get_baseline_transform, get_transform, to_float,
                         transform_to_json, verify_transform)

__version__ = "0.1.0"
