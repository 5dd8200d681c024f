#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// quadform
struct StructurallyDegenerate : Error { using Error::Error; };
struct BadResolution : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// cover
struct UncoveredSample : Error {
    Vec witness;
    UncoveredSample(const std::string& m, Vec w) : Error(m), witness(std::move(w)) {}
};
struct NotInCone : Error { using Error::Error; };
struct SortFailure : Error {
    Vec omega, xi;
    double sigma;
    SortFailure(const std::string& m, Vec o, Vec x, double s)
        : Error(m), omega(std::move(o)), xi(std::move(x)), sigma(s) {}
};

// biortho
struct TooLarge : Error { using Error::Error; };
struct NotTransversal : Error { using Error::Error; };

// sqfn
struct ResolutionTooCoarse : Error { using Error::Error; };
struct PartitionGap : Error { using Error::Error; };
struct GridInfeasible : Error { using Error::Error; };
struct MethodInfeasible : Error { using Error::Error; };

// smoothing
struct NearConeOfDegeneracy : Error { using Error::Error; };
struct QuadratureUnderresolved : Error { using Error::Error; };
struct NyquistViolation : Error { using Error::Error; };

// config
struct ConfigError : Error { using Error::Error; };

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }
inline Vec from_std(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace qc
