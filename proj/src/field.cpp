#include "quadcone/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace qc {

Vec SpectralField::frequency(size_t i) const {
    Vec w(dim);
    for (int k = 0; k < dim; ++k) w[k] = key(i)[k] * spacing[k];
    return w;
}

double SpectralField::l2_squared() const {
    double s = 0;
    for (const auto& c : coeffs) s += std::norm(c);
    return s;
}

std::vector<int> key_span(const std::vector<int>& keys, int dim) {
    std::vector<int> lo(dim, 0), hi(dim, 0);
    const size_t n = keys.size() / static_cast<size_t>(dim);
    for (size_t i = 0; i < n; ++i)
        for (int k = 0; k < dim; ++k) {
            const int v = keys[i * dim + k];
            if (i == 0 || v < lo[k]) lo[k] = v;
            if (i == 0 || v > hi[k]) hi[k] = v;
        }
    std::vector<int> span(dim);
    for (int k = 0; k < dim; ++k) span[k] = hi[k] - lo[k];
    return span;
}

std::vector<int> alias_free_dims(const SpectralField& f) {
    const auto span = key_span(f.keys, f.dim);
    std::vector<int> dims(f.dim);
    std::int64_t total = 1;
    for (int k = 0; k < f.dim; ++k) {
        int n = 1;
        while (n <= 2 * span[k]) n *= 2;
        dims[k] = n;
        total *= n;
        if (total > kMaxGridSamples) throw GridInfeasible("alias-free grid exceeds 2^26 samples");
    }
    return dims;
}

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void fft(std::vector<cplx>& data, const std::vector<int>& dims, int sign) {
    std::int64_t total = 1;
    for (int n : dims) total *= n;
    if (static_cast<std::int64_t>(data.size()) != total) throw DimensionMismatch("fft: data size does not match dims");
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        // Planning is not thread safe in FFTW; execution is.
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr,
                             sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
}

namespace {
std::int64_t wrap_index(const int* key, const std::vector<int>& dims) {
    std::int64_t idx = 0;
    for (size_t k = 0; k < dims.size(); ++k) {
        int m = key[k] % dims[k];
        if (m < 0) m += dims[k];
        idx = idx * dims[k] + m;
    }
    return idx;
}
}  // namespace

GridField to_grid(const SpectralField& f, const std::vector<int>& dims) {
    if (static_cast<int>(dims.size()) != f.dim) throw DimensionMismatch("to_grid: wrong number of axes");
    GridField g;
    g.dims = dims;
    g.extent = Vec(f.dim);
    std::int64_t total = 1;
    for (int k = 0; k < f.dim; ++k) {
        g.extent[k] = 1.0 / f.spacing[k];
        total *= dims[k];
    }
    if (total > kMaxGridSamples) throw GridInfeasible("grid exceeds 2^26 samples");
    g.values.assign(static_cast<size_t>(total), cplx(0, 0));
    for (size_t i = 0; i < f.size(); ++i) g.values[wrap_index(f.key(i), dims)] += f.coeffs[i];
    fft(g.values, dims, +1);
    g.freq_meta = f.caps;
    return g;
}

std::vector<cplx> from_grid(const GridField& g, const SpectralField& pattern) {
    std::vector<cplx> spec = g.values;
    fft(spec, g.dims, -1);
    const double inv = 1.0 / static_cast<double>(spec.size());
    std::vector<cplx> out(pattern.size());
    for (size_t i = 0; i < pattern.size(); ++i) out[i] = spec[wrap_index(pattern.key(i), g.dims)] * inv;
    return out;
}

double grid_mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

DiffAccumulator::DiffAccumulator(int dim, std::vector<int> half_range) : dim_(dim), half_(std::move(half_range)) {
    if (static_cast<int>(half_.size()) != dim) throw DimensionMismatch("accumulator: wrong number of axes");
    stride_.assign(dim, 1);
    std::int64_t total = 1;
    for (int k = dim - 1; k >= 0; --k) {
        stride_[k] = total;
        total *= 2 * half_[k] + 1;
        if (total > kMaxAccumulator) throw GridInfeasible("difference box too large");
    }
    center_ = 0;
    for (int k = 0; k < dim; ++k) center_ += half_[k] * stride_[k];
    data_.assign(static_cast<size_t>(total), cplx(0, 0));
    mark_.assign(static_cast<size_t>(total), 0);
}

void DiffAccumulator::add_autocorrelation(const std::vector<int>& keys, const std::vector<cplx>& coeffs) {
    const size_t n = coeffs.size();
    std::vector<std::int64_t> lin(n, 0);
    for (size_t i = 0; i < n; ++i)
        for (int k = 0; k < dim_; ++k) lin[i] += keys[i * dim_ + k] * stride_[k];
    // Range check on the span once; inside the loop indices are then valid.
    const auto span = key_span(keys, dim_);
    for (int k = 0; k < dim_; ++k)
        if (span[k] > half_[k]) throw GridInfeasible("difference outside accumulator box");
    for (size_t i = 0; i < n; ++i) {
        const cplx ci = coeffs[i];
        if (ci == cplx(0, 0)) continue;
        const std::int64_t base = center_ + lin[i];
        for (size_t j = 0; j < n; ++j) {
            const std::int64_t idx = base - lin[j];
            data_[idx] += ci * std::conj(coeffs[j]);
            if (!mark_[idx]) {
                mark_[idx] = 1;
                touched_.push_back(idx);
            }
        }
    }
}

double DiffAccumulator::energy() const {
    double s = 0;
    for (std::int64_t idx : touched_) s += std::norm(data_[idx]);
    return s;
}

void DiffAccumulator::clear() {
    for (std::int64_t idx : touched_) {
        data_[idx] = cplx(0, 0);
        mark_[idx] = 0;
    }
    touched_.clear();
}

void DiffAccumulator::decode(std::int64_t idx, int* k) const {
    for (int a = 0; a < dim_; ++a) {
        k[a] = static_cast<int>(idx / stride_[a]) - half_[a];
        idx %= stride_[a];
    }
}

}  // namespace qc
