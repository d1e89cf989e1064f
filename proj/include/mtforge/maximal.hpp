#pragma once

#include <cstddef>
#include <vector>

#include "mtforge/weight.hpp"

namespace mtf {

struct MaximalOptions {
    double halfwidth = 1.0;   // tubes are 1-neighbourhoods of lines
    double widen = 0.25;      // transverse slack used to cover an angular bin
    std::size_t max_slices = 4096;
    std::size_t batch = 8;    // slices evaluated per refinement round
    double oversample = 4.0;  // offset grid refinement of each slice
    double slice_tol = 1e-6;  // Phi cut for the slices; the rest goes into the tail
    int threads = 1;
};

struct MaximalBracket {
    double lower = 0.0;   // integral of w over an explicit strip
    double upper = 0.0;   // bound for the sup over all strips
    double angle = 0.0;   // normal angle of the lower witness
    double offset = 0.0;  // its offset along the normal
    double tail = 0.0;    // truncation allowance included in upper
    std::size_t bins = 0;
    std::size_t slices = 0;
    bool refined = false;  // branch and bound closed before the slice budget
};

// Integrals of w over the strips {|<y, nu> - s| <= halfwidth}, nu = (cos a, sin a),
// on an offset grid, via the Fourier slice of w-hat.
struct StripProfile {
    std::vector<double> offset;
    std::vector<double> value;
    double max() const;
};

StripProfile strip_integrals(const FourierWeight& fw, double support_radius, double angle, double halfwidth,
                             double oversample = 4.0);

// Brackets sup_T int_T w over 1-neighbourhoods T of lines (n = 2, l = 1).
MaximalBracket maximal_l(const Weight& w, const FourierWeight& fw, int l, const MaximalOptions& opt = {});

}  // namespace mtf
