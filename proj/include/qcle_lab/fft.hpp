/// @file fft.hpp
/// @brief FFTW plan cache, aligned buffers and the batched spectral line shifter.
///
/// Every spectral operation in the library goes through these helpers so that
/// planning happens once per (length, batch, kind).

#pragma once

#include "core.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace qlab {

/// Worker cap from QCLE_LAB_THREADS, falling back to the OpenMP default.
inline int worker_threads()
{
    if (const char* env = std::getenv("QCLE_LAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

/// fftw_malloc-backed array, 64-byte aligned so cached plans apply to it.
template <class T>
class AlignedBuffer {
public:
    AlignedBuffer() = default;
    explicit AlignedBuffer(std::size_t n) : n_(n), p_(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1))))
    {
        if (!p_) throw std::bad_alloc();
        std::fill(p_, p_ + n_, T{});
    }
    AlignedBuffer(const AlignedBuffer&) = delete;
    AlignedBuffer& operator=(const AlignedBuffer&) = delete;
    AlignedBuffer(AlignedBuffer&& o) noexcept : n_(o.n_), p_(o.p_) { o.p_ = nullptr; o.n_ = 0; }
    AlignedBuffer& operator=(AlignedBuffer&& o) noexcept
    {
        std::swap(n_, o.n_);
        std::swap(p_, o.p_);
        return *this;
    }
    ~AlignedBuffer() { if (p_) fftw_free(p_); }

    T* data() { return p_; }
    const T* data() const { return p_; }
    std::size_t size() const { return n_; }
    T& operator[](std::size_t i) { return p_[i]; }
    const T& operator[](std::size_t i) const { return p_[i]; }

private:
    std::size_t n_ = 0;
    T* p_ = nullptr;
};

inline fftw_complex* fc(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

enum class FftKind { forward, backward, r2c, c2r };

/// Planner rigour from QCLE_LAB_FFTW (estimate|measure), default estimate.
/// Estimated plans are reproducible across processes, so outputs are byte-stable.
inline unsigned planner_flags()
{
    if (const char* env = std::getenv("QCLE_LAB_FFTW")) {
        if (std::string(env) == "measure") return FFTW_MEASURE;
    }
    return FFTW_ESTIMATE;
}

/// Cached plan for `howmany` contiguous lines of length n.
/// Complex lines have distance n (c2c) or n/2+1 (half spectrum of r2c/c2r).
/// Plans are created on scratch arrays and executed with the new-array API;
/// complex-to-complex plans come in in-place and out-of-place flavours.
inline fftw_plan cached_plan(FftKind kind, int n, int howmany, bool inplace = false)
{
    static std::mutex mtx;
    static std::map<std::tuple<int, int, int, bool>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mtx);
    const auto key = std::make_tuple(static_cast<int>(kind), n, howmany, inplace);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const int nh = n / 2 + 1;
    fftw_plan plan = nullptr;
    const unsigned flags = planner_flags();
    if (kind == FftKind::forward || kind == FftKind::backward) {
        AlignedBuffer<cplx> a(static_cast<std::size_t>(n) * howmany);
        AlignedBuffer<cplx> b(static_cast<std::size_t>(n) * howmany);
        const int sign = kind == FftKind::forward ? FFTW_FORWARD : FFTW_BACKWARD;
        cplx* out = inplace ? a.data() : b.data();
        plan = fftw_plan_many_dft(1, &n, howmany, fc(a.data()), nullptr, 1, n, fc(out), nullptr, 1, n, sign, flags);
    } else if (kind == FftKind::r2c) {
        AlignedBuffer<double> a(static_cast<std::size_t>(n) * howmany);
        AlignedBuffer<cplx> b(static_cast<std::size_t>(nh) * howmany);
        plan = fftw_plan_many_dft_r2c(1, &n, howmany, a.data(), nullptr, 1, n, fc(b.data()), nullptr, 1, nh, flags);
    } else {
        AlignedBuffer<cplx> a(static_cast<std::size_t>(nh) * howmany);
        AlignedBuffer<double> b(static_cast<std::size_t>(n) * howmany);
        plan = fftw_plan_many_dft_c2r(1, &n, howmany, fc(a.data()), nullptr, 1, nh, b.data(), nullptr, 1, n, flags | FFTW_DESTROY_INPUT);
    }
    if (!plan) throw NumericalFailure("FFTW planning failed");
    cache.emplace(key, plan);
    return plan;
}

/// Complex transform of `howmany` contiguous lines (unnormalized).
/// Both arrays must come from AlignedBuffer; in == out selects the in-place plan.
inline void fft_lines(cplx* in, cplx* out, int n, int howmany, bool forward)
{
    const FftKind k = forward ? FftKind::forward : FftKind::backward;
    fftw_execute_dft(cached_plan(k, n, howmany, in == out), fc(in), fc(out));
}

/// Smallest length >= n whose prime factors are all in {2, 3, 5, 7}.
inline std::size_t next_smooth_length(std::size_t n)
{
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/// Complex product without the IEEE special-case handling of operator*.
inline cplx cmul(cplx a, cplx b)
{
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Spectral translation of many uniformly sampled lines: out(x) = in(x - delta).
///
/// Each line of n samples is zero-padded to the transform length, multiplied by
/// exp(-i k delta) in Fourier space and truncated back to n samples. With length
/// equal to n this is the exact periodic shift; with a longer length, content
/// pushed past the end of the line is discarded.
///
/// Two real fields are shifted together as the real and imaginary parts of one
/// complex line; their spectra are separated by Hermitian symmetry when the two
/// shifts differ.
class LineShifter {
public:
    LineShifter(std::size_t n, std::size_t length, double spacing, std::size_t block = 16)
        : n_(n), len_(length), block_(block), dk_(2.0 * pi / (static_cast<double>(length) * spacing))
    {
        require(length >= n && n > 0, "LineShifter: transform length must cover the line");
        const int threads = worker_threads();
        for (int t = 0; t < threads; ++t) {
            work_.emplace_back(block_ * len_);
            phase_a_.emplace_back(len_);
            phase_b_.emplace_back(len_);
        }
        // plan up front so that the threaded section never plans
        cached_plan(FftKind::forward, static_cast<int>(len_), static_cast<int>(block_), true);
        cached_plan(FftKind::backward, static_cast<int>(len_), static_cast<int>(block_), true);
    }

    std::size_t length() const { return len_; }

    /// Line l occupies data[l*line_stride + j*elem_stride], j < n.
    template <class DeltaFn>
    void shift_complex(cplx* data, std::size_t nlines, std::ptrdiff_t line_stride, std::ptrdiff_t elem_stride, DeltaFn delta)
    {
        run(nlines, [&](std::size_t l, std::size_t j) -> cplx { return data[at(l, j, line_stride, elem_stride)]; },
            [&](std::size_t l, std::size_t j, cplx v) { data[at(l, j, line_stride, elem_stride)] = v; },
            [&](std::size_t l, cplx* line, cplx* pa, cplx*) {
                fill_phases(delta(l), pa);
                for (std::size_t j = 0; j < len_; ++j) line[j] = cmul(line[j], pa[j]);
            });
    }

    /// Two real fields with per-line shifts delta_a and delta_b.
    template <class DeltaA, class DeltaB>
    void shift_real_pair(double* a, double* b, std::size_t nlines, std::ptrdiff_t line_stride, std::ptrdiff_t elem_stride, DeltaA delta_a,
                         DeltaB delta_b)
    {
        run(nlines,
            [&](std::size_t l, std::size_t j) -> cplx {
                const auto i = at(l, j, line_stride, elem_stride);
                return {a[i], b[i]};
            },
            [&](std::size_t l, std::size_t j, cplx v) {
                const auto i = at(l, j, line_stride, elem_stride);
                a[i] = v.real();
                b[i] = v.imag();
            },
            [&](std::size_t l, cplx* line, cplx* pa, cplx* pb) {
                const double da = delta_a(l), db = delta_b(l);
                fill_phases(da, pa);
                if (da == db) {
                    for (std::size_t j = 0; j < len_; ++j) line[j] = cmul(line[j], pa[j]);
                    return;
                }
                fill_phases(db, pb);
                // Z = A + iB with A, B Hermitian; A_k = (Z_k + Z*_{-k})/2, B_k = (Z_k - Z*_{-k})/(2i)
                for (std::size_t j = 0; j <= len_ / 2; ++j) {
                    const std::size_t jn = (len_ - j) % len_;
                    const cplx z = line[j], zn = line[jn];
                    const cplx av = 0.5 * (z + std::conj(zn));
                    const cplx bv = cplx(0.0, -0.5) * (z - std::conj(zn));
                    const cplx a1 = cmul(av, pa[j]), b1 = cmul(bv, pb[j]);
                    line[j] = a1 + cplx(-b1.imag(), b1.real());
                    if (jn != j) {
                        const cplx a2 = std::conj(a1), b2 = std::conj(b1);
                        line[jn] = a2 + cplx(-b2.imag(), b2.real());
                    }
                }
            });
    }

    /// Single real field (the imaginary slot carries zeros).
    template <class DeltaFn>
    void shift_real(double* data, std::size_t nlines, std::ptrdiff_t line_stride, std::ptrdiff_t elem_stride, DeltaFn delta)
    {
        run(nlines, [&](std::size_t l, std::size_t j) -> cplx { return data[at(l, j, line_stride, elem_stride)]; },
            [&](std::size_t l, std::size_t j, cplx v) { data[at(l, j, line_stride, elem_stride)] = v.real(); },
            [&](std::size_t l, cplx* line, cplx* pa, cplx*) {
                fill_phases(delta(l), pa);
                for (std::size_t j = 0; j < len_; ++j) line[j] = cmul(line[j], pa[j]);
            });
    }

private:
    static std::ptrdiff_t at(std::size_t l, std::size_t j, std::ptrdiff_t ls, std::ptrdiff_t es)
    {
        return static_cast<std::ptrdiff_t>(l) * ls + static_cast<std::ptrdiff_t>(j) * es;
    }

    template <class Load, class Store, class Multiply>
    void run(std::size_t nlines, Load load, Store store, Multiply multiply)
    {
        const std::ptrdiff_t nblocks = static_cast<std::ptrdiff_t>((nlines + block_ - 1) / block_);
        const fftw_plan fwd = cached_plan(FftKind::forward, static_cast<int>(len_), static_cast<int>(block_), true);
        const fftw_plan bwd = cached_plan(FftKind::backward, static_cast<int>(len_), static_cast<int>(block_), true);
        const double scale = 1.0 / static_cast<double>(len_);
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(work_.size()))
        for (std::ptrdiff_t ib = 0; ib < nblocks; ++ib) {
            const int tid = omp_get_thread_num();
            cplx* w = work_[tid].data();
            const std::size_t l0 = static_cast<std::size_t>(ib) * block_;
            const std::size_t nb = std::min(block_, nlines - l0);
            for (std::size_t b = 0; b < block_; ++b) std::fill(w + b * len_ + (b < nb ? n_ : 0), w + (b + 1) * len_, cplx{});
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t b = 0; b < nb; ++b) w[b * len_ + j] = load(l0 + b, j);
            fftw_execute_dft(fwd, fc(w), fc(w));
            for (std::size_t b = 0; b < nb; ++b) multiply(l0 + b, w + b * len_, phase_a_[tid].data(), phase_b_[tid].data());
            fftw_execute_dft(bwd, fc(w), fc(w));
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t b = 0; b < nb; ++b) store(l0 + b, j, w[b * len_ + j] * scale);
        }
    }

    // exp(-i k_j delta) for all bins. Powers of the unit step are re-anchored
    // with an exact sincos every 64 bins. The Nyquist bin of an even length
    // keeps only its real part so that real lines stay real.
    void fill_phases(double delta, cplx* ph) const
    {
        const std::size_t half = len_ / 2;
        const cplx step = std::polar(1.0, -dk_ * delta);
        cplx z{1.0, 0.0};
        for (std::size_t j = 0; j <= half; ++j) {
            if (j % 64 == 0) z = std::polar(1.0, -dk_ * delta * static_cast<double>(j));
            ph[j] = z;
            z = cmul(z, step);
        }
        if (len_ % 2 == 0) ph[half] = cplx(ph[half].real(), 0.0);
        for (std::size_t j = half + 1; j < len_; ++j) ph[j] = std::conj(ph[len_ - j]);
    }

    std::size_t n_, len_, block_;
    double dk_;
    std::vector<AlignedBuffer<cplx>> work_;
    std::vector<AlignedBuffer<cplx>> phase_a_, phase_b_;
};

} // namespace qlab
