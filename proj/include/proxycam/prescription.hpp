#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxycam/lens_system.hpp"

namespace proxycam {

/// Which scalar of a surface a perturbation entry addresses.
enum class ParamKind {
    Curvature,
    Conic,
    Aspheric,   ///< uses `index` into the coefficient list
    TiltAlpha,
    TiltBeta,
    TiltGamma,
    DecenterX,
    DecenterY,
    Thickness,
    IndexD,
    AbbeV,
};

const char* to_string(ParamKind k);

struct ParamRef {
    int surface = 0;
    ParamKind kind = ParamKind::Curvature;
    int index = 0; ///< aspheric coefficient index

    bool operator==(const ParamRef&) const = default;
};

/// One perturbation overlay entry: current delta from the nominal value,
/// the tolerance bound and whether the optimizer may move it.
struct ParamSpec {
    ParamRef ref;
    double delta = 0.0;
    double tolerance = 0.0;
    bool free = false;
    std::optional<double> fd_step; ///< finite-difference step override, native units
};

/// A parsed prescription: nominal surfaces plus the perturbation overlay.
struct Prescription {
    int format = 1;
    std::string name;
    std::vector<Surface> nominal;   ///< overlay NOT applied
    int stop_index = 0;
    SensorModel sensor;
    std::vector<ParamSpec> params;  ///< overlay + tolerances, stable order

    /// Nominal system with the overlay deltas applied.
    LensSystem realize() const;
    /// Nominal system with the overlay deltas replaced by `deltas`
    /// (same order as `params`).
    LensSystem realize_with(const std::vector<double>& deltas) const;
    /// Indices into `params` of the free (optimizable) entries.
    std::vector<int> free_indices() const;
};

/// Parse / serialize the versioned JSON prescription format. In strict mode
/// unknown fields are rejected; lenient mode warns via the returned list.
Prescription parse_prescription(const std::string& path, bool strict = true,
                                std::vector<std::string>* warnings = nullptr);
Prescription parse_prescription_text(const std::string& json_text, bool strict = true,
                                     std::vector<std::string>* warnings = nullptr);
std::string prescription_to_json(const Prescription& p);
void write_prescription(const std::string& path, const Prescription& p);

/// Draw `count` virtual systems with every toleranced parameter uniform in
/// [-tolerance, +tolerance]. Deterministic for a fixed seed.
std::vector<Prescription> sample_virtual_cameras(const Prescription& ideal, int count,
                                                 std::uint64_t seed);

/// Apply one parameter delta on top of a surface in place.
void apply_param(Surface& s, const ParamRef& ref, double delta);
/// Read the nominal value the reference addresses.
double read_param(const Surface& s, const ParamRef& ref);

class PrescriptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
