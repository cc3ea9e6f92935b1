"""Convolution engines: direct, tiled Winograd F(2, r), and decomposed Winograd.

All engines compute cross-correlation (no kernel flip) over N,C,H,W data
with F,C,r_h,r_w weights and agree with each other up to float rounding.

The decomposed path (``dwm_conv2d``) runs five steps per kernel part:
splitting (strided gathers of kernel and padded input), transformation,
elementwise calculation with channel summation in the transform domain,
detransformation, and aggregation of the part outputs in plan order.

Precision notes: every engine runs in the element type of its tensors, so
the binary32 path rounds after each matrix stage; passing object-dtype
arrays of ``fractions.Fraction`` runs the same code exactly (test mode).
Reductions use fixed orders (ascending channel/tap loops, plan order,
row-major tiles) so results are reproducible run to run.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .convspec import ConvSpec
from .decompose import DecompositionPlan, input_region_for_part, plan_decomposition
from .tensor import accumulate, check_finite, pad_input, require_tensor4, slice_strided
from .transforms import (NumericTransformSet, TransformSet, get_transform,
                         precision_dtype, to_exact_arrays, to_float)

_OBJECT = np.dtype(object)


@dataclass(frozen=True)
class ConvOutput:
    """Convolution result plus the elementwise-multiply count actually incurred.

    ``flops`` is normalized per channel, per filter and per image (the same
    normalization the FLOP model uses); None when not instrumented.
    """

    y: np.ndarray
    flops: int | None = None


class FlopCounter:
    """Mutable tally of elementwise transform-domain products."""

    def __init__(self):
        self.elementwise = 0


def _resolve_dtype(data: np.ndarray, precision):
    if precision is None:
        return data.dtype
    return precision_dtype(precision)


def _numeric_for(ts: TransformSet, dtype) -> NumericTransformSet:
    if np.dtype(dtype) == _OBJECT:
        return to_exact_arrays(ts)
    return to_float(ts, np.dtype(dtype))


def _check_pair(data: np.ndarray, weights: np.ndarray):
    require_tensor4(data, "data")
    require_tensor4(weights, "weights")
    if data.shape[1] != weights.shape[1]:
        raise ValueError(
            f"channel mismatch: data has {data.shape[1]}, weights have {weights.shape[1]}")


def _lmul(mat: np.ndarray, x: np.ndarray) -> np.ndarray:
    """mat @ x over x's second-to-last axis."""
    moved = np.tensordot(x, mat, axes=([x.ndim - 2], [1]))
    return np.moveaxis(moved, -1, -2)


def _rmul(x: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """x @ mat.T over x's last axis."""
    return np.tensordot(x, mat, axes=([x.ndim - 1], [1]))


def _bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched matmul with an object-dtype fallback for the exact test mode."""
    if a.dtype == _OBJECT or b.dtype == _OBJECT:
        out = np.empty(a.shape[:-2] + (a.shape[-2], b.shape[-1]), dtype=object)
        for idx in np.ndindex(a.shape[:-2]):
            out[idx] = np.dot(a[idx], b[idx])
        return out
    return a @ b


def _to_blocks(x: np.ndarray) -> np.ndarray:
    """(N, K, TH, TW, lr, lc) -> (lr, lc, K, N*TH*TW) for per-point matmuls."""
    n, k, th, tw, lr, lc = x.shape
    return np.ascontiguousarray(x.transpose(4, 5, 1, 0, 2, 3)).reshape(lr, lc, k, n * th * tw)


def _from_blocks(x: np.ndarray, n: int, th: int, tw: int) -> np.ndarray:
    """(lr, lc, K, N*TH*TW) -> (N, K, TH, TW, lr, lc)."""
    lr, lc, k, _ = x.shape
    return np.ascontiguousarray(x.reshape(lr, lc, k, n, th, tw).transpose(3, 2, 4, 5, 0, 1))


def _tile_geometry(oh: int, ow: int, p_r: int, p_c: int):
    th, tw = -(-oh // 2), -(-ow // 2)
    return th, tw, 2 * th + p_r - 1, 2 * tw + p_c - 1


def _pad_signal(signal: np.ndarray, sh2: int, sw2: int) -> np.ndarray:
    n, c, sh, sw = signal.shape
    if (sh, sw) == (sh2, sw2):
        return signal
    out = np.zeros((n, c, sh2, sw2), dtype=signal.dtype)
    out[:, :, :sh, :sw] = signal
    return out


def _windows(signal: np.ndarray, lr: int, lc: int) -> np.ndarray:
    """2x2-advancing lr x lc input windows: (N, C, TH, TW, lr, lc)."""
    return sliding_window_view(signal, (lr, lc), axis=(2, 3))[:, :, ::2, ::2]


def _grad_tiles(grad_out: np.ndarray, th: int, tw: int) -> np.ndarray:
    """Zero-pad (N, F, OH, OW) to the tile grid and view as (N, F, TH, TW, 2, 2)."""
    n, f, oh, ow = grad_out.shape
    if (oh, ow) != (2 * th, 2 * tw):
        padded = np.zeros((n, f, 2 * th, 2 * tw), dtype=grad_out.dtype)
        padded[:, :, :oh, :ow] = grad_out
    else:
        padded = grad_out
    return padded.reshape(n, f, th, 2, tw, 2).transpose(0, 1, 2, 4, 3, 5)


def direct_conv2d(data: np.ndarray, weights: np.ndarray, spec: ConvSpec,
                  precision=None, counter: FlopCounter | None = None) -> np.ndarray:
    """Plain strided correlation; the in-package baseline for everything else.

    Each output element accumulates in a fixed order: channel ascending,
    then kernel row, then kernel column.
    """
    _check_pair(data, weights)
    if tuple(weights.shape[2:]) != spec.kernel:
        raise ValueError(f"weights taps {weights.shape[2:]} do not match kernel {spec.kernel}")
    dt = _resolve_dtype(data, precision)
    d = data.astype(dt, copy=False)
    w = weights.astype(dt, copy=False)
    dpad = pad_input(d, spec.pad)
    n, c, _, _ = d.shape
    f = w.shape[0]
    r_h, r_w = spec.kernel
    s_h, s_w = spec.stride
    oh, ow = spec.out_dims(d.shape[2], d.shape[3])
    y = np.zeros((n, f, oh, ow), dtype=dt)
    for ci in range(c):
        for ky in range(r_h):
            for kx in range(r_w):
                window = dpad[:, ci, ky:ky + s_h * oh:s_h, kx:kx + s_w * ow:s_w]
                y += w[:, ci, ky, kx][None, :, None, None] * window[:, None, :, :]
    if counter is not None:
        counter.elementwise += oh * ow * r_h * r_w
    return check_finite(y, "direct_conv2d")


def _winograd_forward(signal: np.ndarray, weights: np.ndarray,
                      nt_r: NumericTransformSet, nt_c: NumericTransformSet,
                      counter: FlopCounter | None = None) -> np.ndarray:
    """Tiled F(2, r) correlation of a stride-1 signal.

    Output is cut into 2x2 tiles, each computed from an (r+1) x (r+1)
    window advancing by 2; channel contributions are summed in the
    transform domain, then one detransform runs per tile.  Odd output
    extents are handled by zero-padding the signal to the next even
    extent and truncating the result.
    """
    n, c, sh, sw = signal.shape
    f = weights.shape[0]
    p_r, p_c = nt_r.r, nt_c.r
    oh, ow = sh - p_r + 1, sw - p_c + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"signal {sh}x{sw} too small for taps {p_r}x{p_c}")
    lr, lc = p_r + 1, p_c + 1
    th, tw, sh2, sw2 = _tile_geometry(oh, ow, p_r, p_c)
    padded = _pad_signal(signal, sh2, sw2)

    win = _windows(padded, lr, lc)                       # (N,C,TH,TW,lr,lc)
    v = _rmul(_lmul(nt_r.b_t, win), nt_c.b_t)            # Bt d B
    u = _rmul(_lmul(nt_r.g, weights), nt_c.g)            # G g Gt
    u_blocks = np.ascontiguousarray(u.transpose(2, 3, 0, 1))      # (lr,lc,F,C)
    m = _from_blocks(_bmm(u_blocks, _to_blocks(v)), n, th, tw)    # sum over channels
    if counter is not None:
        counter.elementwise += th * tw * lr * lc
    tiles = _rmul(_lmul(nt_r.a_t, m), nt_c.a_t)          # At m A -> (N,F,TH,TW,2,2)
    y = tiles.transpose(0, 1, 2, 4, 3, 5).reshape(n, f, 2 * th, 2 * tw)
    return np.ascontiguousarray(y[:, :, :oh, :ow])


def winograd_conv2d(data: np.ndarray, weights: np.ndarray, ts: TransformSet,
                    ts_cols: TransformSet | None = None, precision=None,
                    counter: FlopCounter | None = None) -> np.ndarray:
    """Classic tiled Winograd correlation, stride 1 only.

    ``data`` must already carry any zero padding.  Rectangular kernels use
    separate row/column transforms (``ts_cols`` defaults to ``ts``).
    Strided convolutions are out of this engine's reach; decompose them
    with a plan and use dwm_conv2d.
    """
    _check_pair(data, weights)
    tsc = ts_cols if ts_cols is not None else ts
    if ts.m != 2 or tsc.m != 2:
        raise ValueError("engine produces 2x2 output tiles; transforms must have m == 2")
    if tuple(weights.shape[2:]) != (ts.r, tsc.r):
        raise ValueError(f"weights taps {weights.shape[2:]} do not match F(2,{ts.r})xF(2,{tsc.r})")
    dt = _resolve_dtype(data, precision)
    y = _winograd_forward(data.astype(dt, copy=False), weights.astype(dt, copy=False),
                          _numeric_for(ts, dt), _numeric_for(tsc, dt), counter)
    return check_finite(y, "winograd_conv2d")


def dwm_conv2d(data: np.ndarray, weights: np.ndarray, spec: ConvSpec,
               plan: DecompositionPlan | None = None, precision=None,
               counter: FlopCounter | None = None) -> np.ndarray:
    """Decomposed Winograd convolution for any kernel size and stride.

    Pads the input once, then for each plan part gathers the kernel
    sub-block and the matching strided input slice, runs the tiled
    Winograd engine at stride 1, and aggregates part outputs in plan
    order.  Equals direct_conv2d up to float rounding (exactly, in the
    object-dtype test mode).
    """
    _check_pair(data, weights)
    if tuple(weights.shape[2:]) != spec.kernel:
        raise ValueError(f"weights taps {weights.shape[2:]} do not match kernel {spec.kernel}")
    if plan is None:
        plan = plan_decomposition(spec)
    elif plan.spec != spec:
        raise ValueError("plan was built for a different ConvSpec")
    dt = _resolve_dtype(data, precision)
    d = data.astype(dt, copy=False)
    w = weights.astype(dt, copy=False)
    dpad = pad_input(d, spec.pad)
    oh, ow = spec.out_dims(d.shape[2], d.shape[3])

    acc = None
    for part in plan.parts:
        row, col = part.row, part.col
        gsub = w[:, :,
                 row.origin:row.origin + row.step * row.count:row.step,
                 col.origin:col.origin + col.step * col.count:col.step]
        (ro, rs, rc), (co, cs, cc) = input_region_for_part(plan, part, (oh, ow))
        sig = slice_strided(dpad, (ro, co), (rs, cs), (rc, cc))
        y_part = _winograd_forward(sig, gsub,
                                   _numeric_for(part.transform_rows, dt),
                                   _numeric_for(part.transform_cols, dt), counter)
        acc = y_part if acc is None else accumulate(acc, y_part)
    return check_finite(acc, "dwm_conv2d")


def _winograd_grad_data_impl(grad_out: np.ndarray, weights: np.ndarray,
                             nt_r: NumericTransformSet, nt_c: NumericTransformSet) -> np.ndarray:
    """Signal gradient of _winograd_forward: B[(A dY At) . (G g Gt)]Bt per tile,
    scatter-added into the overlapping input windows in row-major tile order."""
    n, f, oh, ow = grad_out.shape
    c = weights.shape[1]
    p_r, p_c = nt_r.r, nt_c.r
    lr, lc = p_r + 1, p_c + 1
    th, tw, sh2, sw2 = _tile_geometry(oh, ow, p_r, p_c)

    tiles = _grad_tiles(grad_out, th, tw)
    dm = _rmul(_lmul(nt_r.a_t.T, tiles), nt_c.a_t.T)     # A dY At -> (N,F,TH,TW,lr,lc)
    u = _rmul(_lmul(nt_r.g, weights), nt_c.g)            # (F,C,lr,lc)
    u_blocks = np.ascontiguousarray(u.transpose(2, 3, 1, 0))      # (lr,lc,C,F)
    dv = _from_blocks(_bmm(u_blocks, _to_blocks(dm)), n, th, tw)  # sum over filters
    dwin = _rmul(_lmul(nt_r.b_t.T, dv), nt_c.b_t.T)      # B (.) Bt

    dsig = np.zeros((n, c, sh2, sw2), dtype=grad_out.dtype)
    for t in range(th):
        for s in range(tw):
            dsig[:, :, 2 * t:2 * t + lr, 2 * s:2 * s + lc] += dwin[:, :, t, s]
    return np.ascontiguousarray(dsig[:, :, :oh + p_r - 1, :ow + p_c - 1])


def _winograd_grad_weight_impl(grad_out: np.ndarray, signal: np.ndarray,
                               nt_r: NumericTransformSet, nt_c: NumericTransformSet) -> np.ndarray:
    """Weight gradient of _winograd_forward: Gt[(A dY At) . (Bt d B)]G,
    accumulated over tiles and batch in the transform domain."""
    n, f, oh, ow = grad_out.shape
    c = signal.shape[1]
    p_r, p_c = nt_r.r, nt_c.r
    lr, lc = p_r + 1, p_c + 1
    th, tw, sh2, sw2 = _tile_geometry(oh, ow, p_r, p_c)
    if signal.shape[2:] != (oh + p_r - 1, ow + p_c - 1):
        raise ValueError(
            f"signal {signal.shape[2:]} does not match output {oh}x{ow} "
            f"with taps {p_r}x{p_c}")

    padded = _pad_signal(signal, sh2, sw2)
    v = _rmul(_lmul(nt_r.b_t, _windows(padded, lr, lc)), nt_c.b_t)
    tiles = _grad_tiles(grad_out, th, tw)
    dm = _rmul(_lmul(nt_r.a_t.T, tiles), nt_c.a_t.T)

    dm_blocks = _to_blocks(dm)                           # (lr,lc,F,NTT)
    v_blocks = _to_blocks(v)                             # (lr,lc,C,NTT)
    du = _bmm(dm_blocks, v_blocks.transpose(0, 1, 3, 2))  # (lr,lc,F,C)
    du = np.ascontiguousarray(du.transpose(2, 3, 0, 1))   # (F,C,lr,lc)
    dg = _rmul(_lmul(nt_r.g.T, du), nt_c.g.T)             # Gt (.) G
    return np.ascontiguousarray(dg)


def winograd_grad_data(grad_out: np.ndarray, weights: np.ndarray, ts: TransformSet,
                       ts_cols: TransformSet | None = None, precision=None) -> np.ndarray:
    """Gradient w.r.t. the stride-1 input signal of winograd_conv2d."""
    require_tensor4(grad_out, "grad_out")
    require_tensor4(weights, "weights")
    tsc = ts_cols if ts_cols is not None else ts
    if tuple(weights.shape[2:]) != (ts.r, tsc.r):
        raise ValueError(f"weights taps {weights.shape[2:]} do not match F(2,{ts.r})xF(2,{tsc.r})")
    if grad_out.shape[1] != weights.shape[0]:
        raise ValueError(
            f"grad_out has {grad_out.shape[1]} filters, weights have {weights.shape[0]}")
    dt = _resolve_dtype(grad_out, precision)
    out = _winograd_grad_data_impl(grad_out.astype(dt, copy=False),
                                   weights.astype(dt, copy=False),
                                   _numeric_for(ts, dt), _numeric_for(tsc, dt))
    return check_finite(out, "winograd_grad_data")


def winograd_grad_weight(grad_out: np.ndarray, data: np.ndarray, ts: TransformSet,
                         ts_cols: TransformSet | None = None, precision=None) -> np.ndarray:
    """Gradient w.r.t. the weights of winograd_conv2d, summed over tiles and batch."""
    require_tensor4(grad_out, "grad_out")
    require_tensor4(data, "data")
    tsc = ts_cols if ts_cols is not None else ts
    if grad_out.shape[0] != data.shape[0]:
        raise ValueError(f"batch mismatch: {grad_out.shape[0]} vs {data.shape[0]}")
    dt = _resolve_dtype(grad_out, precision)
    out = _winograd_grad_weight_impl(grad_out.astype(dt, copy=False),
                                     data.astype(dt, copy=False),
                                     _numeric_for(ts, dt), _numeric_for(tsc, dt))
    return check_finite(out, "winograd_grad_weight")


def dwm_backward(grad_out: np.ndarray, plan: DecompositionPlan, data: np.ndarray,
                 weights: np.ndarray, precision=None) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of dwm_conv2d w.r.t. data and weights.

    Aggregation is a plain sum, so every part receives the whole ``grad_out``
    unchanged; no per-part outputs need to be stored.  Per-part data
    gradients scatter back through each part's strided input slice and sum;
    per-part weight gradients land in disjoint kernel sub-blocks, so the
    weight gradient is assembled by placement.  Weights stay in the spatial
    domain; nothing Winograd-transformed persists between calls.
    """
    _check_pair(data, weights)
    require_tensor4(grad_out, "grad_out")
    spec = plan.spec
    if tuple(weights.shape[2:]) != spec.kernel:
        raise ValueError(f"weights taps {weights.shape[2:]} do not match kernel {spec.kernel}")
    oh, ow = spec.out_dims(data.shape[2], data.shape[3])
    n, _, _, _ = data.shape
    f = weights.shape[0]
    if grad_out.shape != (n, f, oh, ow):
        raise ValueError(f"grad_out shape {grad_out.shape} != {(n, f, oh, ow)}")

    dt = _resolve_dtype(grad_out, precision)
    gout = grad_out.astype(dt, copy=False)
    d = data.astype(dt, copy=False)
    w = weights.astype(dt, copy=False)
    dpad = pad_input(d, spec.pad)
    grad_pad = np.zeros_like(dpad)
    grad_w = np.zeros_like(w)

    for idx, part in enumerate(plan.parts):
        row, col = part.row, part.col
        nt_r = _numeric_for(part.transform_rows, dt)
        nt_c = _numeric_for(part.transform_cols, dt)
        gsub = w[:, :,
                 row.origin:row.origin + row.step * row.count:row.step,
                 col.origin:col.origin + col.step * col.count:col.step]
        (ro, rs, rc), (co, cs, cc) = input_region_for_part(plan, part, (oh, ow))
        sig = slice_strided(dpad, (ro, co), (rs, cs), (rc, cc))

        gd = _winograd_grad_data_impl(gout, gsub, nt_r, nt_c)
        view = grad_pad[:, :, ro:ro + rs * rc:rs, co:co + cs * cc:cs]
        if idx == 0:
            view[...] = gd
        else:
            view += gd

        grad_w[:, :,
               row.origin:row.origin + row.step * row.count:row.step,
               col.origin:col.origin + col.step * col.count:col.step] = \
            _winograd_grad_weight_impl(gout, sig, nt_r, nt_c)

    top, _, left, _ = spec.pad
    h, wd = data.shape[2], data.shape[3]
    grad_d = np.ascontiguousarray(grad_pad[:, :, top:top + h, left:left + wd])
    check_finite(grad_d, "dwm_backward")
    check_finite(grad_w, "dwm_backward")
    return grad_d, grad_w


def convolve(data: np.ndarray, weights: np.ndarray, spec: ConvSpec,
             algo: str = "direct", precision=None,
             plan: DecompositionPlan | None = None) -> ConvOutput:
    """Run one convolution by name ("direct", "winograd", "dwm") with instrumentation."""
    counter = FlopCounter()
    if algo == "direct":
        y = direct_conv2d(data, weights, spec, precision=precision, counter=counter)
    elif algo == "winograd":
        if spec.stride != (1, 1):
            raise ValueError(
                "classic Winograd is stride-1 only; use --algo dwm for strided convolutions")
        dt = _resolve_dtype(data, precision)
        dpad = pad_input(data.astype(dt, copy=False), spec.pad)
        y = winograd_conv2d(dpad, weights, get_transform(spec.kernel[0]),
                            get_transform(spec.kernel[1]), counter=counter)
    elif algo == "dwm":
        y = dwm_conv2d(data, weights, spec, plan=plan, precision=precision, counter=counter)
    else:
        raise ValueError(f"unknown algorithm {algo!r}; expected direct, winograd or dwm")
    return ConvOutput(y=y, flops=counter.elementwise)
