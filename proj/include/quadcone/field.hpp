#pragma once

#include <cstdint>
#include <vector>

#include "quadcone/types.hpp"

namespace qc {

// Trigonometric polynomial f(x) = sum_i c_i exp(2 pi i <omega_i, x>) with
// omega_i = keys_i * spacing (componentwise) on a rectangular lattice.
struct SpectralField {
    int dim = 0;
    Vec spacing;
    std::vector<int> keys;  // dim entries per term
    std::vector<cplx> coeffs;
    std::vector<int> caps;  // caps used to build the field
    bool conical = false;
    double delta = 0;

    size_t size() const { return coeffs.size(); }
    const int* key(size_t i) const { return keys.data() + i * static_cast<size_t>(dim); }
    Vec frequency(size_t i) const;
    double l2_squared() const;  // mean of |f|^2 over one period
};

// Samples of one period of a lattice field. dims are powers of two; extent is
// the period 1 / spacing per axis.
struct GridField {
    std::vector<int> dims;
    Vec extent;
    std::vector<cplx> values;
    std::vector<int> freq_meta;

    size_t total() const { return values.size(); }
};

constexpr std::int64_t kMaxGridSamples = std::int64_t(1) << 26;

// Per-axis powers of two large enough that |f|^4 has no aliasing (n > 2 span).
// Throws GridInfeasible above kMaxGridSamples.
std::vector<int> alias_free_dims(const SpectralField& f);

// In-place multidimensional FFT (row-major, last axis fastest). sign = +1 is
// synthesis (no normalisation), -1 analysis.
void fft(std::vector<cplx>& data, const std::vector<int>& dims, int sign);

GridField to_grid(const SpectralField& f, const std::vector<int>& dims);
// Lattice coefficients back from samples: entry at each key modulo dims.
std::vector<cplx> from_grid(const GridField& g, const SpectralField& pattern);

double grid_mean(const std::vector<double>& v);

// Dense accumulator for sums of autocorrelations sum_{i,j} c_i conj(c_j) at
// key difference k_i - k_j, restricted to a box |k| <= half_range.
class DiffAccumulator {
public:
    DiffAccumulator(int dim, std::vector<int> half_range);

    // All ordered pairs of the given terms (keys flat, dim per term).
    void add_autocorrelation(const std::vector<int>& keys, const std::vector<cplx>& coeffs);
    // sum over touched differences of |G(k)|^2 * weight(k).
    template <class W>
    double weighted_energy(W weight) const {
        std::vector<int> k(dim_);
        double s = 0;
        for (std::int64_t idx : touched_) {
            const double g = std::norm(data_[idx]);
            if (g == 0) continue;
            decode(idx, k.data());
            s += g * weight(k.data());
        }
        return s;
    }
    double energy() const;
    void clear();
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

private:
    void decode(std::int64_t idx, int* k) const;

    int dim_;
    std::vector<int> half_;
    std::vector<std::int64_t> stride_;
    std::int64_t center_ = 0;
    std::vector<cplx> data_;
    std::vector<std::uint8_t> mark_;
    std::vector<std::int64_t> touched_;
};

constexpr std::int64_t kMaxAccumulator = std::int64_t(1) << 27;

// Per-axis span (max - min key) over a set of terms.
std::vector<int> key_span(const std::vector<int>& keys, int dim);

}  // namespace qc
