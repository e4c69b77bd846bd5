#include "gdd/io.hpp"

#include "gdd/errors.hpp"

#include "json.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gdd {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return in;
}

// Header line: "# {json}". The provenance argument may itself be JSON; keep
// it structured if so, verbatim otherwise.
json header_base(const std::string& kind, const std::string& provenance) {
    json j;
    j["kind"] = kind;
    if (!provenance.empty()) {
        json p = json::parse(provenance, nullptr, false);
        j["provenance"] = p.is_discarded() ? json(provenance) : p;
    }
    return j;
}

void write_rows(std::ofstream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m(i, c));
        }
        out << '\n';
    }
}

Eigen::VectorXd vector_field(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || !j[key].is_array())
        throw ParseError(path + ": header is missing the '" + key + "' array");
    const auto& arr = j[key];
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

} // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& header_json) {
    std::ofstream out = open_out(path);
    if (!header_json.empty()) out << "# " << header_json << '\n';
    write_rows(out, m);
    if (!out) throw ParseError("failed writing '" + path + "'");
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::string* header_json) {
    std::ifstream in = open_in(path);
    if (header_json) header_json->clear();

    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') {
            if (first && header_json) {
                size_t start = 1;
                while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start])))
                    ++start;
                *header_json = line.substr(start);
            }
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError(path + ": bad number '" + cell + "'");
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                ++used;
            if (used != cell.size()) throw ParseError(path + ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (row.empty()) throw ParseError(path + ": empty row");
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ": ragged rows (" + std::to_string(row.size()) + " vs " +
                             std::to_string(rows.front().size()) + " columns)");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");

    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t c = 0; c < rows.front().size(); ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    return m;
}

std::uint64_t file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

std::string file_hash_hex(const std::string& path) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(file_content_hash(path)));
    return buf;
}

void write_basis(const std::string& path, const GeodesicBasis& basis,
                 const std::string& provenance) {
    json j = header_base("basis", provenance);
    j["eigenvalues"] = std::vector<double>(basis.eigenvalues.begin(), basis.eigenvalues.end());
    write_matrix_csv(path, basis.Q, j.dump());
}

GeodesicBasis read_basis(const std::string& path) {
    std::string header;
    GeodesicBasis basis;
    basis.Q = read_matrix_csv(path, &header);
    json j = json::parse(header, nullptr, false);
    if (j.is_discarded()) throw ParseError(path + ": missing or malformed basis header");
    basis.eigenvalues = vector_field(j, "eigenvalues", path);
    if (basis.eigenvalues.size() != basis.Q.cols())
        throw ParseError(path + ": eigenvalue count does not match the column count");
    return basis;
}

void write_lbo_basis(const std::string& path, const LboBasis& basis,
                     const std::string& provenance) {
    json j = header_base("lbo", provenance);
    j["frequencies"] = std::vector<double>(basis.frequencies.begin(), basis.frequencies.end());
    j["mass"] = std::vector<double>(basis.mass.begin(), basis.mass.end());
    write_matrix_csv(path, basis.Phi, j.dump());
}

LboBasis read_lbo_basis(const std::string& path) {
    std::string header;
    LboBasis basis;
    basis.Phi = read_matrix_csv(path, &header);
    json j = json::parse(header, nullptr, false);
    if (j.is_discarded()) throw ParseError(path + ": missing or malformed basis header");
    basis.frequencies = vector_field(j, "frequencies", path);
    basis.mass = vector_field(j, "mass", path);
    if (basis.frequencies.size() != basis.Phi.cols())
        throw ParseError(path + ": frequency count does not match the column count");
    if (basis.mass.size() != basis.Phi.rows())
        throw ParseError(path + ": mass vector length does not match the vertex count");
    return basis;
}

void write_gdd(const std::string& path, const GeodesicDistanceDescriptor& gdd,
               const std::string& provenance) {
    json j = header_base("gdd", provenance);
    j["eigenvalues"] = std::vector<double>(gdd.eigenvalues.begin(), gdd.eigenvalues.end());
    j["signature"] = std::vector<int>(gdd.signature.begin(), gdd.signature.end());
    write_matrix_csv(path, gdd.X, j.dump());
}

GeodesicDistanceDescriptor read_gdd(const std::string& path) {
    std::string header;
    GeodesicDistanceDescriptor g;
    g.X = read_matrix_csv(path, &header);
    json j = json::parse(header, nullptr, false);
    if (j.is_discarded()) throw ParseError(path + ": missing or malformed descriptor header");
    g.eigenvalues = vector_field(j, "eigenvalues", path);
    const Eigen::VectorXd sig = vector_field(j, "signature", path);
    g.signature.resize(sig.size());
    for (Eigen::Index c = 0; c < sig.size(); ++c) {
        if (sig[c] != 1.0 && sig[c] != -1.0)
            throw ParseError(path + ": signature entries must be +1 or -1");
        g.signature[c] = static_cast<int>(sig[c]);
    }
    if (g.eigenvalues.size() != g.X.cols() || g.signature.size() != g.X.cols())
        throw ParseError(path + ": header vectors do not match the column count");
    return g;
}

void write_correspondence(const std::string& path, const Correspondence& corr,
                          const std::string& provenance) {
    std::ofstream out = open_out(path);
    out << "# " << header_base("correspondence", provenance).dump() << '\n';
    out << "source,target\n";
    for (size_t i = 0; i < corr.map.size(); ++i) out << i << ',' << corr.map[i] << '\n';
    if (!out) throw ParseError("failed writing '" + path + "'");
}

namespace {

std::vector<std::pair<int, int>> read_index_pairs(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b, extra;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw ParseError(path + ": expected two comma-separated columns");
        if (std::getline(ss, extra, ','))
            throw ParseError(path + ": expected two comma-separated columns");
        try {
            size_t ua = 0, ub = 0;
            const int ia = std::stoi(a, &ua);
            const int ib = std::stoi(b, &ub);
            if (ua != a.size() || ub != b.size()) throw std::invalid_argument(line);
            pairs.emplace_back(ia, ib);
        } catch (const std::exception&) {
            // A non-numeric first data line is a column header; anything
            // later is a real error.
            if (pairs.empty()) continue;
            throw ParseError(path + ": bad index pair '" + line + "'");
        }
    }
    if (pairs.empty()) throw ParseError(path + ": no index pairs");
    return pairs;
}

} // namespace

Correspondence read_correspondence(const std::string& path) {
    const auto pairs = read_index_pairs(path);
    const int n = static_cast<int>(pairs.size());
    Correspondence corr;
    corr.map.assign(static_cast<size_t>(n), -1);
    for (const auto& [src, tgt] : pairs) {
        if (src < 0 || src >= n)
            throw ParseError(path + ": source indices must cover 0.." + std::to_string(n - 1));
        if (corr.map[static_cast<size_t>(src)] != -1)
            throw ParseError(path + ": duplicate source index " + std::to_string(src));
        if (tgt < 0) throw ParseError(path + ": negative target index");
        corr.map[static_cast<size_t>(src)] = tgt;
    }
    return corr;
}

LandmarkSet read_landmarks(const std::string& path) {
    LandmarkSet lm;
    for (const auto& [a, b] : read_index_pairs(path)) {
        if (a < 0 || b < 0) throw ParseError(path + ": negative landmark index");
        lm.pairs.emplace_back(a, b);
    }
    return lm;
}

void write_curve(const std::string& path, const DistortionCurve& curve,
                 const std::string& provenance) {
    std::ofstream out = open_out(path);
    out << "# " << header_base("distortion_curve", provenance).dump() << '\n';
    out << "threshold,fraction\n";
    for (size_t i = 0; i < curve.thresholds.size(); ++i)
        out << format_double(curve.thresholds[i]) << ',' << format_double(curve.fractions[i])
            << '\n';
    if (!out) throw ParseError("failed writing '" + path + "'");
}

DistortionCurve read_curve(const std::string& path) {
    std::ifstream in = open_in(path);
    DistortionCurve curve;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || line == "threshold,fraction") continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw ParseError(path + ": expected 'threshold,fraction' rows");
        try {
            curve.thresholds.push_back(std::stod(a));
            curve.fractions.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ParseError(path + ": bad curve row '" + line + "'");
        }
    }
    if (curve.thresholds.empty()) throw ParseError(path + ": no curve rows");
    return curve;
}

void write_objective(const std::string& path, const std::vector<ObjectiveRow>& rows,
                     const std::string& provenance) {
    std::ofstream out = open_out(path);
    out << "# " << header_base("objective_table", provenance).dump() << '\n';
    out << "name,rms,raw_sq_sum\n";
    for (const auto& row : rows)
        out << row.name << ',' << format_double(row.rms) << ','
            << format_double(row.raw_squared_sum) << '\n';
    if (!out) throw ParseError("failed writing '" + path + "'");
}

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in = open_in(path);
    std::map<std::string, std::string> config;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
        config[key] = value;
    }
    return config;
}

} // namespace gdd
