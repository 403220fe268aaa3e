#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

#include "json.hpp"

#include "linelab/homeo.hpp"
#include "linelab/interval.hpp"

namespace linelab {

// All reports and wire formats use insertion-ordered keys so identical inputs
// produce byte-identical files.
using Json = nlohmann::ordered_json;

// Numeric fields travel as decimal strings: shortest form that round-trips
// the double exactly.
inline std::string num_str(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double num_parse(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw Error(ErrorCode::IllFormed, "expected numeric string");
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw Error(ErrorCode::IllFormed, "unparsable number: " + s);
    return v;
}

inline Json interval_json(const Interval& iv) {
    return Json{{"lo", num_str(iv.lo)}, {"hi", num_str(iv.hi)}};
}

inline Interval interval_from_json(const Json& j) {
    return Interval(num_parse(j.at("lo")), num_parse(j.at("hi")));
}

inline Json to_json(const Homeo& f) {
    const HomeoNode& n = f.node();
    switch (n.kind) {
    case NodeKind::Identity: return Json{{"op", "identity"}};
    case NodeKind::Affine:
        return Json{{"op", "affine"}, {"slope", num_str(n.slope)}, {"offset", num_str(n.offset)}};
    case NodeKind::Translation:
        return Json{{"op", "translation"}, {"offset", num_str(n.offset)}};
    case NodeKind::ExpBump:
        return Json{{"op", "expbump"}, {"support", interval_json(n.iv)}};
    case NodeKind::Piecewise: {
        Json pieces = Json::array();
        for (std::size_t i = 0; i < n.children.size(); ++i)
            pieces.push_back(Json{{"domain", interval_json(n.domains[i])}, {"map", to_json(n.children[i])}});
        return Json{{"op", "piecewise"}, {"window", interval_json(n.iv)}, {"pieces", pieces}};
    }
    case NodeKind::Compose: {
        Json maps = Json::array();
        for (const auto& c : n.children) maps.push_back(to_json(c));
        return Json{{"op", "compose"}, {"maps", maps}};
    }
    case NodeKind::Inverse:
        return Json{{"op", "inverse"}, {"of", to_json(n.children.front())}};
    case NodeKind::Yoccoz:
        return Json{{"op", "yoccoz"}, {"from", interval_json(n.iv)}, {"to", interval_json(n.iv2)}};
    case NodeKind::Stage:
        return Json{{"op", "stage"}, {"stage", n.stage}, {"depth", n.depth}};
    }
    return Json{{"op", "identity"}};
}

inline Homeo homeo_from_json(const Json& j) {
    const std::string op = j.at("op").get<std::string>();
    if (op == "identity") return Homeo::identity();
    if (op == "affine") return Homeo::affine(num_parse(j.at("slope")), num_parse(j.at("offset")));
    if (op == "translation") return Homeo::translation(num_parse(j.at("offset")));
    if (op == "expbump") return Homeo::exp_bump(interval_from_json(j.at("support")));
    if (op == "piecewise") {
        std::vector<std::pair<Interval, Homeo>> pieces;
        for (const auto& p : j.at("pieces"))
            pieces.emplace_back(interval_from_json(p.at("domain")), homeo_from_json(p.at("map")));
        return Homeo::piecewise(interval_from_json(j.at("window")), std::move(pieces));
    }
    if (op == "compose") {
        std::vector<Homeo> maps;
        for (const auto& m : j.at("maps")) maps.push_back(homeo_from_json(m));
        return Homeo::compose(std::move(maps));
    }
    if (op == "inverse") return homeo_from_json(j.at("of")).inverse();
    if (op == "yoccoz")
        return Homeo::yoccoz(interval_from_json(j.at("from")), interval_from_json(j.at("to")));
    if (op == "stage") return Homeo::stage_map(j.at("stage").get<int>(), j.at("depth").get<int>());
    throw Error(ErrorCode::IllFormed, "unknown homeo op: " + op);
}

} // namespace linelab
