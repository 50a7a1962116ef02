#include "proxycam/prescription.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "proxycam/rng.hpp"

namespace proxycam {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(ParamKind k) {
    switch (k) {
        case ParamKind::Curvature: return "dc";
        case ParamKind::Conic: return "dk";
        case ParamKind::Aspheric: return "dA";
        case ParamKind::TiltAlpha: return "tilt_a";
        case ParamKind::TiltBeta: return "tilt_b";
        case ParamKind::TiltGamma: return "tilt_g";
        case ParamKind::DecenterX: return "decenter_x";
        case ParamKind::DecenterY: return "decenter_y";
        case ParamKind::Thickness: return "dthickness";
        case ParamKind::IndexD: return "dnd";
        case ParamKind::AbbeV: return "dvd";
    }
    return "?";
}

void apply_param(Surface& s, const ParamRef& ref, double delta) {
    switch (ref.kind) {
        case ParamKind::Curvature: s.curvature += delta; break;
        case ParamKind::Conic: s.conic += delta; break;
        case ParamKind::Aspheric:
            if (ref.index >= int(s.aspheric.size())) s.aspheric.resize(ref.index + 1, 0.0);
            s.aspheric[ref.index] += delta;
            break;
        case ParamKind::TiltAlpha: s.tilt_alpha += delta; break;
        case ParamKind::TiltBeta: s.tilt_beta += delta; break;
        case ParamKind::TiltGamma: s.tilt_gamma += delta; break;
        case ParamKind::DecenterX: s.decenter_x += delta; break;
        case ParamKind::DecenterY: s.decenter_y += delta; break;
        case ParamKind::Thickness: s.thickness += delta; break;
        case ParamKind::IndexD: s.material.nd += delta; break;
        case ParamKind::AbbeV: s.material.vd += delta; break;
    }
}

double read_param(const Surface& s, const ParamRef& ref) {
    switch (ref.kind) {
        case ParamKind::Curvature: return s.curvature;
        case ParamKind::Conic: return s.conic;
        case ParamKind::Aspheric:
            return ref.index < int(s.aspheric.size()) ? s.aspheric[ref.index] : 0.0;
        case ParamKind::TiltAlpha: return s.tilt_alpha;
        case ParamKind::TiltBeta: return s.tilt_beta;
        case ParamKind::TiltGamma: return s.tilt_gamma;
        case ParamKind::DecenterX: return s.decenter_x;
        case ParamKind::DecenterY: return s.decenter_y;
        case ParamKind::Thickness: return s.thickness;
        case ParamKind::IndexD: return s.material.nd;
        case ParamKind::AbbeV: return s.material.vd;
    }
    return 0.0;
}

LensSystem Prescription::realize() const {
    LensSystem sys;
    sys.surfaces = nominal;
    sys.stop_index = stop_index;
    sys.sensor = sensor;
    for (const auto& p : params) apply_param(sys.surfaces[p.ref.surface], p.ref, p.delta);
    sys.validate();
    return sys;
}

LensSystem Prescription::realize_with(const std::vector<double>& deltas) const {
    if (deltas.size() != params.size())
        throw PrescriptionError("delta vector length does not match the overlay");
    LensSystem sys;
    sys.surfaces = nominal;
    sys.stop_index = stop_index;
    sys.sensor = sensor;
    for (size_t i = 0; i < params.size(); ++i)
        apply_param(sys.surfaces[params[i].ref.surface], params[i].ref, deltas[i]);
    sys.validate();
    return sys;
}

std::vector<int> Prescription::free_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].free) out.push_back(int(i));
    return out;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw PrescriptionError(path + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path,
                bool strict, std::vector<std::string>* warnings) {
    for (const auto& [key, _] : obj.items()) {
        if (allowed.count(key)) continue;
        if (strict) fail(path + "." + key, "unknown field");
        if (warnings) warnings->push_back(path + "." + key + ": unknown field ignored");
    }
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) fail(path + "." + key, "missing");
    if (!obj[key].is_number()) fail(path + "." + key, "must be a number");
    return obj[key].get<double>();
}

double optional_number(const json& obj, const std::string& key, double fallback,
                       const std::string& path) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(path + "." + key, "must be a number");
    return obj[key].get<double>();
}

// A perturbation entry is either a plain number (fixed delta) or an object
// {value, tolerance, free, step}.
ParamSpec parse_entry(const json& v, const ParamRef& ref, const std::string& path, bool strict,
                      std::vector<std::string>* warnings) {
    ParamSpec spec;
    spec.ref = ref;
    if (v.is_number()) {
        spec.delta = v.get<double>();
        return spec;
    }
    if (!v.is_object()) fail(path, "must be a number or an object");
    check_keys(v, {"value", "tolerance", "free", "step"}, path, strict, warnings);
    spec.delta = optional_number(v, "value", 0.0, path);
    spec.tolerance = optional_number(v, "tolerance", 0.0, path);
    if (spec.tolerance < 0.0) fail(path + ".tolerance", "must be >= 0");
    if (v.contains("free")) {
        if (!v["free"].is_boolean()) fail(path + ".free", "must be a boolean");
        spec.free = v["free"].get<bool>();
    }
    if (spec.free && spec.tolerance <= 0.0)
        fail(path, "a free parameter needs a positive tolerance");
    if (v.contains("step")) {
        const double s = require_number(v, "step", path);
        if (s <= 0.0) fail(path + ".step", "must be positive");
        spec.fd_step = s;
    }
    return spec;
}

SensorModel parse_sensor(const json& j, const std::string& path, bool strict,
                         std::vector<std::string>* warnings) {
    SensorModel sensor;
    if (!j.is_object()) fail(path, "must be an object");
    check_keys(j,
               {"pixel_pitch_um", "resolution", "bit_depth", "wavelengths_um", "channels"},
               path, strict, warnings);
    sensor.pixel_pitch_um = require_number(j, "pixel_pitch_um", path);
    if (j.contains("resolution")) {
        const auto& res = j["resolution"];
        if (!res.is_array() || res.size() != 2) fail(path + ".resolution", "expected [rows, cols]");
        sensor.rows = res[0].get<int>();
        sensor.cols = res[1].get<int>();
    }
    sensor.bit_depth = int(optional_number(j, "bit_depth", 12, path));
    if (j.contains("wavelengths_um")) {
        sensor.wavelengths_um.clear();
        for (const auto& w : j["wavelengths_um"]) sensor.wavelengths_um.push_back(w.get<double>());
    }
    if (j.contains("channels")) {
        sensor.channels.clear();
        int idx = 0;
        for (const auto& ch : j["channels"]) {
            const std::string chpath = path + ".channels[" + std::to_string(idx++) + "]";
            check_keys(ch, {"name", "response"}, chpath, strict, warnings);
            SpectralChannel out;
            out.name = ch.contains("name") ? ch["name"].get<std::string>() : "ch" + std::to_string(idx);
            if (!ch.contains("response")) fail(chpath + ".response", "missing");
            for (const auto& r : ch["response"]) out.response.push_back(r.get<double>());
            sensor.channels.push_back(std::move(out));
        }
    } else {
        // Mono default spanning the wavelength list.
        sensor.channels = {{"mono", std::vector<double>(sensor.wavelengths_um.size(),
                                                        1.0 / sensor.wavelengths_um.size())}};
    }
    return sensor;
}

} // namespace

Prescription parse_prescription_text(const std::string& json_text, bool strict,
                                     std::vector<std::string>* warnings) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw PrescriptionError(std::string("JSON parse error: ") + e.what());
    }
    if (!root.is_object()) fail("$", "prescription must be a JSON object");
    // "provenance" is written by the tools (config hash stamp) and ignored here.
    check_keys(root, {"format", "name", "sensor", "stop_index", "surfaces", "perturbation",
                      "provenance"},
               "$", strict, warnings);

    Prescription p;
    if (!root.contains("format")) fail("$.format", "missing");
    p.format = root["format"].get<int>();
    if (p.format != 1) fail("$.format", "unsupported version " + std::to_string(p.format));
    p.name = root.contains("name") ? root["name"].get<std::string>() : "unnamed";

    if (!root.contains("surfaces") || !root["surfaces"].is_array() || root["surfaces"].empty())
        fail("$.surfaces", "at least one surface required");

    int si = 0;
    for (const auto& js : root["surfaces"]) {
        const std::string path = "$.surfaces[" + std::to_string(si++) + "]";
        check_keys(js, {"c", "k", "A", "semi_aperture", "thickness", "material"}, path, strict,
                   warnings);
        Surface s;
        s.curvature = optional_number(js, "c", 0.0, path);
        s.conic = optional_number(js, "k", 0.0, path);
        if (js.contains("A"))
            for (const auto& a : js["A"]) s.aspheric.push_back(a.get<double>());
        s.semi_aperture = require_number(js, "semi_aperture", path);
        if (s.semi_aperture <= 0.0) fail(path + ".semi_aperture", "must be positive");
        s.thickness = require_number(js, "thickness", path);
        if (js.contains("material")) {
            const auto& m = js["material"];
            if (m.is_string()) {
                if (m.get<std::string>() != "air") fail(path + ".material", "unknown material name");
            } else if (m.is_object()) {
                check_keys(m, {"nd", "vd"}, path + ".material", strict, warnings);
                s.material.nd = require_number(m, "nd", path + ".material");
                s.material.vd = require_number(m, "vd", path + ".material");
            } else {
                fail(path + ".material", "must be \"air\" or {nd, vd}");
            }
        }
        try {
            s.validate();
        } catch (const std::exception& e) {
            fail(path, e.what());
        }
        p.nominal.push_back(std::move(s));
    }

    p.stop_index = int(optional_number(root, "stop_index", 0, "$"));
    if (p.stop_index < 0 || p.stop_index >= int(p.nominal.size()))
        fail("$.stop_index", "out of range");

    if (root.contains("sensor")) p.sensor = parse_sensor(root["sensor"], "$.sensor", strict, warnings);
    try {
        p.sensor.validate();
    } catch (const std::exception& e) {
        fail("$.sensor", e.what());
    }

    if (root.contains("perturbation")) {
        if (!root["perturbation"].is_array()) fail("$.perturbation", "must be an array");
        int pi = 0;
        for (const auto& jp : root["perturbation"]) {
            const std::string path = "$.perturbation[" + std::to_string(pi++) + "]";
            check_keys(jp,
                       {"surface", "dc", "dk", "dA", "tilt", "decenter", "dthickness", "dnd", "dvd"},
                       path, strict, warnings);
            if (!jp.contains("surface")) fail(path + ".surface", "missing");
            const int surf = jp["surface"].get<int>();
            if (surf < 0 || surf >= int(p.nominal.size())) fail(path + ".surface", "out of range");

            auto push = [&](const char* key, ParamKind kind, int index = 0) {
                if (!jp.contains(key)) return;
                p.params.push_back(parse_entry(jp[key], ParamRef{surf, kind, index},
                                               path + "." + key, strict, warnings));
            };
            push("dc", ParamKind::Curvature);
            push("dk", ParamKind::Conic);
            if (jp.contains("dA")) {
                const auto& da = jp["dA"];
                if (!da.is_array()) fail(path + ".dA", "must be an array");
                for (size_t i = 0; i < da.size(); ++i)
                    p.params.push_back(parse_entry(da[i], ParamRef{surf, ParamKind::Aspheric, int(i)},
                                                   path + ".dA[" + std::to_string(i) + "]", strict,
                                                   warnings));
            }
            if (jp.contains("tilt")) {
                const auto& t = jp["tilt"];
                if (!t.is_array() || t.size() != 3) fail(path + ".tilt", "expected 3 entries");
                const ParamKind kinds[3] = {ParamKind::TiltAlpha, ParamKind::TiltBeta,
                                            ParamKind::TiltGamma};
                for (int i = 0; i < 3; ++i)
                    p.params.push_back(parse_entry(t[i], ParamRef{surf, kinds[i], 0},
                                                   path + ".tilt[" + std::to_string(i) + "]",
                                                   strict, warnings));
            }
            if (jp.contains("decenter")) {
                const auto& d = jp["decenter"];
                if (!d.is_array() || d.size() != 2) fail(path + ".decenter", "expected 2 entries");
                const ParamKind kinds[2] = {ParamKind::DecenterX, ParamKind::DecenterY};
                for (int i = 0; i < 2; ++i)
                    p.params.push_back(parse_entry(d[i], ParamRef{surf, kinds[i], 0},
                                                   path + ".decenter[" + std::to_string(i) + "]",
                                                   strict, warnings));
            }
            push("dthickness", ParamKind::Thickness);
            if (jp.contains("dnd") || jp.contains("dvd")) {
                if (p.nominal[surf].material.is_air())
                    fail(path, "material perturbation on an air gap");
                push("dnd", ParamKind::IndexD);
                push("dvd", ParamKind::AbbeV);
            }
        }
    }

    // The realized system must be valid as well.
    try {
        p.realize();
    } catch (const std::exception& e) {
        fail("$", std::string("overlay produces an invalid system: ") + e.what());
    }
    return p;
}

Prescription parse_prescription(const std::string& path, bool strict,
                                std::vector<std::string>* warnings) {
    std::ifstream is(path);
    if (!is) throw PrescriptionError("cannot open prescription: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_prescription_text(ss.str(), strict, warnings);
}

namespace {

ordered_json entry_to_json(const ParamSpec& spec) {
    if (spec.tolerance == 0.0 && !spec.free && !spec.fd_step) return spec.delta;
    ordered_json v;
    v["value"] = spec.delta;
    if (spec.tolerance > 0.0) v["tolerance"] = spec.tolerance;
    if (spec.free) v["free"] = true;
    if (spec.fd_step) v["step"] = *spec.fd_step;
    return v;
}

} // namespace

std::string prescription_to_json(const Prescription& p) {
    ordered_json root;
    root["format"] = p.format;
    root["name"] = p.name;

    ordered_json sensor;
    sensor["pixel_pitch_um"] = p.sensor.pixel_pitch_um;
    sensor["resolution"] = {p.sensor.rows, p.sensor.cols};
    sensor["bit_depth"] = p.sensor.bit_depth;
    sensor["wavelengths_um"] = p.sensor.wavelengths_um;
    ordered_json channels = ordered_json::array();
    for (const auto& ch : p.sensor.channels) {
        ordered_json c;
        c["name"] = ch.name;
        c["response"] = ch.response;
        channels.push_back(c);
    }
    sensor["channels"] = channels;
    root["sensor"] = sensor;
    root["stop_index"] = p.stop_index;

    ordered_json surfaces = ordered_json::array();
    for (const auto& s : p.nominal) {
        ordered_json js;
        js["c"] = s.curvature;
        js["k"] = s.conic;
        if (!s.aspheric.empty()) js["A"] = s.aspheric;
        js["semi_aperture"] = s.semi_aperture;
        js["thickness"] = s.thickness;
        if (s.material.is_air()) {
            js["material"] = "air";
        } else {
            js["material"] = ordered_json{{"nd", s.material.nd}, {"vd", s.material.vd}};
        }
        surfaces.push_back(js);
    }
    root["surfaces"] = surfaces;

    // Group overlay entries per surface in the canonical field order.
    ordered_json perturbation = ordered_json::array();
    for (int surf = 0; surf < int(p.nominal.size()); ++surf) {
        ordered_json jp;
        ordered_json tilt = {0.0, 0.0, 0.0};
        ordered_json decenter = {0.0, 0.0};
        bool any = false, any_tilt = false, any_decenter = false;
        std::vector<ordered_json> da;
        for (const auto& spec : p.params) {
            if (spec.ref.surface != surf) continue;
            any = true;
            switch (spec.ref.kind) {
                case ParamKind::Curvature: jp["dc"] = entry_to_json(spec); break;
                case ParamKind::Conic: jp["dk"] = entry_to_json(spec); break;
                case ParamKind::Aspheric:
                    if (int(da.size()) <= spec.ref.index) da.resize(spec.ref.index + 1, 0.0);
                    da[spec.ref.index] = entry_to_json(spec);
                    break;
                case ParamKind::TiltAlpha: tilt[0] = entry_to_json(spec); any_tilt = true; break;
                case ParamKind::TiltBeta: tilt[1] = entry_to_json(spec); any_tilt = true; break;
                case ParamKind::TiltGamma: tilt[2] = entry_to_json(spec); any_tilt = true; break;
                case ParamKind::DecenterX: decenter[0] = entry_to_json(spec); any_decenter = true; break;
                case ParamKind::DecenterY: decenter[1] = entry_to_json(spec); any_decenter = true; break;
                case ParamKind::Thickness: jp["dthickness"] = entry_to_json(spec); break;
                case ParamKind::IndexD: jp["dnd"] = entry_to_json(spec); break;
                case ParamKind::AbbeV: jp["dvd"] = entry_to_json(spec); break;
            }
        }
        if (!any) continue;
        jp["surface"] = surf;
        if (!da.empty()) jp["dA"] = da;
        if (any_tilt) jp["tilt"] = tilt;
        if (any_decenter) jp["decenter"] = decenter;
        perturbation.push_back(jp);
    }
    root["perturbation"] = perturbation;
    return root.dump(2) + "\n";
}

void write_prescription(const std::string& path, const Prescription& p) {
    std::ofstream os(path);
    if (!os) throw PrescriptionError("cannot open for writing: " + path);
    os << prescription_to_json(p);
    if (!os) throw PrescriptionError("write failed: " + path);
}

std::vector<Prescription> sample_virtual_cameras(const Prescription& ideal, int count,
                                                 std::uint64_t seed) {
    if (count < 0) throw PrescriptionError("camera count must be >= 0");
    for (const auto& spec : ideal.params)
        if (!std::isfinite(spec.tolerance)) throw PrescriptionError("tolerances must be finite");

    std::vector<Prescription> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        // Per-camera stream keyed by (seed, index): stable under reordering.
        SplitMix64 rng(seed ^ (0x51a7c0debeefull + std::uint64_t(i) * 0x9e3779b97f4a7c15ull));
        Prescription cam = ideal;
        cam.name = ideal.name + "-v" + std::to_string(i);
        for (auto& spec : cam.params)
            if (spec.tolerance > 0.0)
                spec.delta = rng.next_in(-spec.tolerance, spec.tolerance);
        out.push_back(std::move(cam));
    }
    return out;
}

} // namespace proxycam
