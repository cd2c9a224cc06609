#include "spinrs/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace spinrs {

namespace {

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidParams(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InvalidParams(std::string(what) + ": " + e.what());
    }
}

void check_shape(const CMat& m, int rows, int cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols)
        throw InvalidParams(std::string(what) + " has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                            std::to_string(cols));
}

struct Fnv {
    std::uint64_t h = 1469598103934665603ULL;
    void add(double v) {
        if (v == 0.0) v = 0.0;  // fold -0
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    }
    void add(cplx z) {
        add(z.real());
        add(z.imag());
    }
    void add(const CMat& m) {
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) add(m(i, j));
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

}  // namespace

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

json to_json(const CMat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const CVec& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
    return out;
}

json row_to_json(const CRow& v) { return vector_to_json(v.transpose()); }

cplx complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidParams("complex number must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

CMat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw InvalidParams("matrix must be a nested array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    CMat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols) throw InvalidParams("ragged matrix");
        for (int c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[i][c]);
    }
    return m;
}

CVec vector_from_json(const json& j) {
    if (!j.is_array()) throw InvalidParams("vector must be an array");
    CVec v(static_cast<int>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = complex_from_json(j[i]);
    return v;
}

json to_json(const ModelParams& p) {
    return {{"n", p.n},
            {"d", p.d},
            {"q", to_json(p.q)},
            {"tol_identity", p.tol_identity},
            {"tol_rank", p.tol_rank},
            {"seed", p.seed}};
}

ModelParams params_from_json(const json& j) {
    return guarded("ModelParams", [&] {
        ModelParams p;
        p.n = field(j, "n").get<int>();
        p.d = field(j, "d").get<int>();
        p.q = complex_from_json(field(j, "q"));
        if (j.contains("tol_identity")) p.tol_identity = j.at("tol_identity").get<double>();
        if (j.contains("tol_rank")) p.tol_rank = j.at("tol_rank").get<double>();
        if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
        p.validate();
        return p;
    });
}

json to_json(const LocalPoint& p, const ModelParams& params) {
    return {{"schema", kSchema},
            {"kind", "LocalPoint"},
            {"params", to_json(params)},
            {"x", vector_to_json(p.x)},
            {"a", to_json(p.a)},
            {"b", to_json(p.b)}};
}

json to_json(const AmbientPoint& m, const ModelParams& params) {
    json v = json::array(), w = json::array();
    for (const CRow& r : m.V) v.push_back(row_to_json(r));
    for (const CVec& c : m.W) w.push_back(vector_to_json(c));
    return {{"schema", kSchema},
            {"kind", "AmbientPoint"},
            {"params", to_json(params)},
            {"X", to_json(m.X)},
            {"Z", to_json(m.Z)},
            {"V", v},
            {"W", w}};
}

json to_json(const GaugeFrame& g) {
    json perm = json::array();
    for (int i : g.permutation) perm.push_back(i + 1);
    return {{"g", to_json(g.g)}, {"permutation", perm}};
}

json to_json(const RankCertificate& c) {
    return {{"schema", kSchema},
            {"kind", "RankCertificate"},
            {"family", family_name(c.family)},
            {"rows", c.rows},
            {"cols", c.cols},
            {"rank", c.rank},
            {"expected", c.expected},
            {"threshold", c.threshold},
            {"gap", std::isfinite(c.gap) ? json(c.gap) : json("inf")},
            {"singular_values", c.singular_values}};
}

json to_json(const IntegralTable& t) {
    auto key = [](std::initializer_list<int> xs) {
        std::string s;
        for (int x : xs) s += (s.empty() ? "" : ",") + std::to_string(x);
        return s;
    };
    json j = {{"h", json::object()}, {"t", json::object()}, {"gt", json::object()},
              {"kz", json::object()}, {"trS", json::object()}};
    for (const auto& [k, v] : t.h) j["h"][key({k})] = to_json(v);
    for (const auto& [ix, v] : t.t) j["t"][key({std::get<0>(ix) + 1, std::get<1>(ix) + 1, std::get<2>(ix)})] = to_json(v);
    for (const auto& [ix, v] : t.gt) j["gt"][key({ix.second, ix.first})] = to_json(v);
    for (const auto& [ix, v] : t.kz) j["kz"][key({ix.first, ix.second})] = to_json(v);
    for (const auto& [ix, v] : t.trs) j["trS"][key({ix.first, ix.second})] = to_json(v);
    return j;
}

LocalPoint local_point_from_json(const json& j) {
    return guarded("LocalPoint", [&] {
        CVec x = vector_from_json(field(j, "x"));
        CMat a = matrix_from_json(field(j, "a"));
        CMat b = matrix_from_json(field(j, "b"));
        const int n = static_cast<int>(x.size());
        check_shape(a, n, static_cast<int>(a.cols()), "a");
        check_shape(b, n, static_cast<int>(a.cols()), "b");
        return LocalPoint::make(x, a, b);
    });
}

AmbientPoint ambient_point_from_json(const json& j) {
    return guarded("AmbientPoint", [&] {
        AmbientPoint m;
        m.X = matrix_from_json(field(j, "X"));
        m.Z = matrix_from_json(field(j, "Z"));
        const int n = static_cast<int>(m.X.rows());
        check_shape(m.X, n, n, "X");
        check_shape(m.Z, n, n, "Z");
        const json& v = field(j, "V");
        const json& w = field(j, "W");
        if (!v.is_array() || !w.is_array() || v.size() != w.size() || v.empty())
            throw InvalidParams("V and W must be nonempty arrays of equal length");
        for (size_t al = 0; al < v.size(); ++al) {
            CVec row = vector_from_json(v[al]);
            CVec col = vector_from_json(w[al]);
            if (row.size() != n || col.size() != n) throw InvalidParams("spin vector of wrong length");
            m.V.push_back(row.transpose());
            m.W.push_back(col);
        }
        return m;
    });
}

json read_document(const std::string& path, std::string* kind) {
    std::ifstream in(path);
    if (!in) throw InvalidParams("cannot open " + path);
    json j = guarded(path.c_str(), [&] { return json::parse(in); });
    if (!j.is_object() || j.value("schema", "") != kSchema)
        throw InvalidParams(path + ": missing or unsupported schema (expected " + kSchema + ")");
    if (kind) *kind = j.value("kind", "");
    return j;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidParams("cannot write " + tmp.string());
        out << content;
        if (!out) throw InvalidParams("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string point_digest(const LocalPoint& p) {
    Fnv f;
    f.add(CMat(p.x));
    f.add(p.a);
    f.add(p.b);
    return f.hex();
}

std::string point_digest(const AmbientPoint& m) {
    Fnv f;
    f.add(m.X);
    f.add(m.Z);
    for (const CRow& v : m.V) f.add(CMat(v));
    for (const CVec& w : m.W) f.add(CMat(w));
    return f.hex();
}

}  // namespace spinrs
