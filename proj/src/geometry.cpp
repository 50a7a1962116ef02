#include "proxycam/geometry.hpp"

namespace proxycam {

Mat3 euler_tilt_matrix(double alpha, double beta, double gamma) {
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double cg = std::cos(gamma), sg = std::sin(gamma);

    Mat3 rz;
    rz.m = {cg, -sg, 0, sg, cg, 0, 0, 0, 1};
    Mat3 rx;
    rx.m = {1, 0, 0, 0, cb, -sb, 0, sb, cb};
    Mat3 ry;
    ry.m = {ca, 0, -sa, 0, 1, 0, sa, 0, ca};

    return rz * rx * ry;
}

} // namespace proxycam
