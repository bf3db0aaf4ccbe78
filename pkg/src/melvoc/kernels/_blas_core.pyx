# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution core.

Mirrors the numpy backend's algorithms (per-tap dgemm accumulation over
lda-strided views of the padded input for stride 1, im2col for strided
convolutions) with the padding, weight widening, activation, and output
store fused into single C passes and dgemm invoked directly. Both
backends use the same fixed per-element accumulation order; results
agree to the last float64 ulp and are identical after float32 rounding.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memset

from scipy.linalg.cython_blas cimport dgemm


cdef void _dgemm_rm(const double* a, int lda, const double* b, int ldb,
                    double* c, int ldc, int m, int k, int n,
                    double beta) noexcept nogil:
    # Row-major C(m,n) = A(m,k) @ B(k,n) via column-major BLAS:
    # compute C^T = B^T A^T by swapping operand order. ld* are row strides.
    cdef double alpha = 1.0
    cdef char tn = b'N'
    dgemm(&tn, &tn, &n, &m, &k, &alpha, <double*> b, &ldb, <double*> a, &lda,
          &beta, c, &ldc)


cdef int _tile_width(int out_ch, int t_out) noexcept nogil:
    cdef int w = (4 << 20) // (out_ch * 8)
    if w < 512:
        w = 512
    if w > t_out:
        w = t_out
    return w


def conv1d(const double[:, ::1] x, const float[:, :, ::1] w, const float[::1] b,
           int stride, int dilation, int padding, double leaky_slope,
           const double[:, ::1] residual, double[:, ::1] out):
    """Fill *out* (out_ch, t_out) with the strided dilated convolution of
    the (optionally leaky-ReLU-activated) input, plus bias and the
    optional residual."""
    cdef int in_ch = x.shape[0], t_in = x.shape[1]
    cdef int out_ch = w.shape[0], kernel = w.shape[2]
    cdef int t_out = out.shape[1]
    cdef int t_pad = t_in + 2 * padding
    cdef int rows = in_ch * kernel
    cdef int tile_w = _tile_width(out_ch, t_out)
    cdef bint has_res = residual is not None
    cdef const double[:, ::1] res = residual if has_res else x

    cdef double* xp = <double*> malloc(in_ch * t_pad * sizeof(double))
    cdef double* wk = <double*> malloc(kernel * out_ch * in_ch * sizeof(double))
    cdef double* acc = <double*> malloc(out_ch * tile_w * sizeof(double))
    cdef double* cols = NULL
    cdef double* wcols = NULL
    if stride != 1:
        cols = <double*> malloc(rows * tile_w * sizeof(double))
        wcols = <double*> malloc(out_ch * rows * sizeof(double))
    if (xp == NULL or wk == NULL or acc == NULL
            or (stride != 1 and (cols == NULL or wcols == NULL))):
        free(xp); free(wk); free(acc); free(cols); free(wcols)
        raise MemoryError()

    cdef int i, k, o, t, start, width, lo
    cdef double v, bo
    try:
        with nogil:
            memset(xp, 0, in_ch * t_pad * sizeof(double))
            for i in range(in_ch):
                for t in range(t_in):
                    v = x[i, t]
                    xp[i * t_pad + padding + t] = v if v >= 0 or leaky_slope == 0.0 else leaky_slope * v
            # wk[k] is the (out_ch, in_ch) tap matrix
            for k in range(kernel):
                for o in range(out_ch):
                    for i in range(in_ch):
                        wk[(k * out_ch + o) * in_ch + i] = w[o, i, k]
            if stride != 1:
                # im2col layout: rows are (i, k), i-major
                for o in range(out_ch):
                    for i in range(in_ch):
                        for k in range(kernel):
                            wcols[o * rows + i * kernel + k] = w[o, i, k]

            start = 0
            while start < t_out:
                width = t_out - start
                if width > tile_w:
                    width = tile_w
                if stride == 1:
                    for k in range(kernel):
                        _dgemm_rm(wk + k * out_ch * in_ch, in_ch,
                                  xp + start + k * dilation, t_pad,
                                  acc, width,
                                  out_ch, in_ch, width, 0.0 if k == 0 else 1.0)
                else:
                    for i in range(in_ch):
                        for k in range(kernel):
                            lo = start * stride + k * dilation
                            for t in range(width):
                                cols[(i * kernel + k) * width + t] = xp[i * t_pad + lo + t * stride]
                    _dgemm_rm(wcols, rows, cols, width, acc, width,
                              out_ch, rows, width, 0.0)
                for o in range(out_ch):
                    bo = b[o]
                    if has_res:
                        for t in range(width):
                            out[o, start + t] = acc[o * width + t] + bo + res[o, start + t]
                    else:
                        for t in range(width):
                            out[o, start + t] = acc[o * width + t] + bo
                start += width
    finally:
        free(xp); free(wk); free(acc); free(cols); free(wcols)


def conv_transpose1d(const double[:, ::1] x, const float[:, :, ::1] w,
                     const float[::1] b, int stride, int padding,
                     double leaky_slope, double[:, ::1] out):
    """Fill *out* (out_ch, t_out) with the transposed convolution of the
    (optionally leaky-ReLU-activated) input."""
    cdef int in_ch = x.shape[0], t_in = x.shape[1]
    cdef int out_ch = w.shape[1], kernel = w.shape[2]
    cdef int t_out = out.shape[1]
    cdef int full_len = (t_in - 1) * stride + kernel

    cdef double* x64 = <double*> malloc(in_ch * t_in * sizeof(double))
    cdef double* w2 = <double*> malloc(out_ch * kernel * in_ch * sizeof(double))
    cdef double* y = <double*> malloc(out_ch * kernel * t_in * sizeof(double))
    cdef double* full = <double*> malloc(out_ch * full_len * sizeof(double))
    if x64 == NULL or w2 == NULL or y == NULL or full == NULL:
        free(x64); free(w2); free(y); free(full)
        raise MemoryError()

    cdef int i, k, o, t
    cdef double v, bo
    try:
        with nogil:
            for i in range(in_ch):
                for t in range(t_in):
                    v = x[i, t]
                    x64[i * t_in + t] = v if v >= 0 or leaky_slope == 0.0 else leaky_slope * v
            # w2[(o, k), i] = w[i, o, k]
            for i in range(in_ch):
                for o in range(out_ch):
                    for k in range(kernel):
                        w2[(o * kernel + k) * in_ch + i] = w[i, o, k]
            _dgemm_rm(w2, in_ch, x64, t_in, y, t_in,
                      out_ch * kernel, in_ch, t_in, 0.0)

            memset(full, 0, out_ch * full_len * sizeof(double))
            for o in range(out_ch):
                for k in range(kernel):
                    for t in range(t_in):
                        full[o * full_len + t * stride + k] += y[(o * kernel + k) * t_in + t]
            for o in range(out_ch):
                bo = b[o]
                for t in range(t_out):
                    out[o, t] = full[o * full_len + padding + t] + bo
    finally:
        free(x64); free(w2); free(y); free(full)
