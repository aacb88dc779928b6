#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "mudet/errors.hpp"

namespace mudet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Decided bits: entries are exactly -1.0 or +1.0.
using BitVector = Eigen::VectorXd;

enum class DetectorId { conv, zf, ml, nd, tm };

inline const char* to_string(DetectorId id) {
    switch (id) {
        case DetectorId::conv: return "conv";
        case DetectorId::zf: return "zf";
        case DetectorId::ml: return "ml";
        case DetectorId::nd: return "nd";
        case DetectorId::tm: return "tm";
    }
    return "?";
}

inline DetectorId detector_from_string(const std::string& s) {
    if (s == "conv") return DetectorId::conv;
    if (s == "zf") return DetectorId::zf;
    if (s == "ml") return DetectorId::ml;
    if (s == "nd") return DetectorId::nd;
    if (s == "tm") return DetectorId::tm;
    throw ConfigError("unknown detector id: " + s);
}

inline bool is_bipolar(const BitVector& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (b[i] != 1.0 && b[i] != -1.0) return false;
    return true;
}

/// sign with the documented tie-break sign(0) = +1.
inline double sign_pos(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace mudet
