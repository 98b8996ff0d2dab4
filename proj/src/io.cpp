#include "renewalkit/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace rk {

namespace fs = std::filesystem;

CompartmentSystem NetworkFile::system() const { return decompose(network, partition, compartment_names); }

NetworkFile parse_network(const Json& doc) {
    if (!doc.is_object()) throw InputError("network document must be an object");
    for (const char* key : {"states", "rates", "partition"})
        if (!doc.contains(key)) throw InputError(std::string("network document lacks field '") + key + "'");
    NetworkFile nf;
    std::vector<std::string> states;
    std::vector<RateEntry> rates;
    try {
        states = doc.at("states").get<std::vector<std::string>>();
        for (const auto& r : doc.at("rates"))
            rates.push_back({r.at("from").get<std::string>(), r.at("to").get<std::string>(), r.at("rate").get<double>()});
        nf.partition = doc.at("partition").get<std::vector<std::vector<std::string>>>();
        if (doc.contains("compartment_names"))
            nf.compartment_names = doc.at("compartment_names").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed network document: ") + e.what());
    }
    nf.network = validate_network(states, rates);
    nf.n0 = Vec::Zero(nf.network.size());
    if (doc.contains("initial")) {
        if (!doc.at("initial").is_object()) throw InputError("'initial' must map state names to amounts");
        for (const auto& [k, v] : doc.at("initial").items()) {
            if (!v.is_number()) throw InputError("initial amount of '" + k + "' is not a number");
            nf.n0(nf.network.index(k)) = v.get<double>();
        }
        if (nf.n0.minCoeff() < 0.0) throw InputError("initial amounts must be nonnegative");
    }
    nf.system();  // validates the partition
    return nf;
}

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

NetworkFile read_network_file(const std::string& path) { return parse_network(read_json(path)); }

double round12(double x) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

Json network_to_json(const ReactionNetwork& net, const std::vector<std::vector<int>>& partition,
                     const std::vector<std::string>& names) {
    Json doc;
    doc["states"] = net.states;
    Json rates = Json::array();
    for (int j = 0; j < net.size(); ++j)
        for (int i = 0; i < net.size(); ++i)
            if (i != j && net.A(i, j) > 0.0)
                rates.push_back({{"from", net.states[j]}, {"to", net.states[i]}, {"rate", round12(net.A(i, j))}});
    doc["rates"] = rates;
    Json part = Json::array();
    for (const auto& block : partition) {
        Json b = Json::array();
        for (int s : block) b.push_back(net.states[s]);
        part.push_back(b);
    }
    doc["partition"] = part;
    if (!names.empty()) doc["compartment_names"] = names;
    return doc;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + path + "'");
        out << text;
        if (!out) throw InputError("write failed for '" + path + "'");
    }
    fs::rename(tmp, p);
}

static void round_all(Json& j) {
    if (j.is_number_float()) j = round12(j.get<double>());
    else if (j.is_structured())
        for (auto& x : j) round_all(x);
}

void write_json(const std::string& path, const Json& doc) {
    Json copy = doc;
    round_all(copy);
    write_text_atomic(path, copy.dump(2) + "\n");
}

void write_table(const std::string& path, const std::vector<std::string>& headers, const Mat& rows) {
    if (static_cast<Eigen::Index>(headers.size()) != rows.cols())
        throw InputError("table header does not match column count");
    std::string s;
    for (size_t c = 0; c < headers.size(); ++c) s += (c ? "\t" : "") + headers[c];
    s += "\n";
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            if (c) s += '\t';
            s += fmt12(rows(r, c));
        }
        s += '\n';
    }
    write_text_atomic(path, s);
}

void write_scalar_kernels(const std::string& path, const ScalarKernelSet& sk) {
    const int nc = sk.count(), nn = sk.grid.nodes();
    std::vector<std::string> h{"t"};
    std::vector<const Series*> cols;
    for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b)
            if (a != b) {
                h.push_back("Phi[" + sk.names[a] + "->" + sk.names[b] + "]");
                cols.push_back(&sk.Phi(a, b));
            }
    for (int a = 0; a < nc; ++a) {
        h.push_back("k[" + sk.names[a] + "]");
        cols.push_back(&sk.k[a]);
    }
    for (int a = 0; a < nc; ++a) {
        h.push_back("B0[" + sk.names[a] + "]");
        cols.push_back(&sk.B0[a]);
    }
    for (int a = 0; a < nc; ++a) {
        h.push_back("D0[" + sk.names[a] + "]");
        cols.push_back(&sk.D0[a]);
    }
    Mat m(nn, h.size());
    for (int i = 0; i < nn; ++i) m(i, 0) = sk.grid.t(i);
    for (size_t c = 0; c < cols.size(); ++c) m.col(c + 1) = *cols[c];
    write_table(path, h, m);
}

static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

ScalarKernelSet read_scalar_kernels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
    const auto head = split(line, '\t');
    if (head.empty() || head[0] != "t") throw InputError("'" + path + "' is not a kernel table");
    std::vector<std::vector<double>> cols(head.size());
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != head.size()) throw InputError("'" + path + "' row " + std::to_string(row) + ": wrong field count");
        for (size_t c = 0; c < f.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(f[c].c_str(), &end);
            if (end == f[c].c_str()) throw InputError("'" + path + "' row " + std::to_string(row) + ": not a number");
            cols[c].push_back(v);
        }
    }
    const int nn = static_cast<int>(cols[0].size());
    if (nn < 2) throw InputError("kernel table needs at least two rows");
    const double dt = cols[0][1] - cols[0][0];
    const TimeGrid grid = make_grid(cols[0].back(), dt);
    if (grid.nodes() != nn) throw InputError("kernel table times are not a uniform grid");

    std::vector<std::string> names;
    auto bracket = [](const std::string& h, const std::string& pre) -> std::string {
        if (h.rfind(pre + "[", 0) != 0 || h.back() != ']') return {};
        return h.substr(pre.size() + 1, h.size() - pre.size() - 2);
    };
    for (const auto& h : head) {
        const std::string n = bracket(h, "k");
        if (!n.empty()) names.push_back(n);
    }
    if (names.empty()) throw InputError("kernel table has no k[...] columns");
    ScalarKernelSet sk = empty_scalar_set(grid, names);
    std::map<std::string, int> idx;
    for (size_t a = 0; a < names.size(); ++a) idx[names[a]] = static_cast<int>(a);
    auto to_series = [&](size_t c) {
        Series s(nn);
        for (int i = 0; i < nn; ++i) s(i) = cols[c][i];
        return s;
    };
    for (size_t c = 1; c < head.size(); ++c) {
        const std::string& h = head[c];
        if (auto p = bracket(h, "Phi"); !p.empty()) {
            const auto arrow = p.find("->");
            if (arrow == std::string::npos) throw InputError("bad kernel column '" + h + "'");
            const auto a = idx.find(p.substr(0, arrow)), b = idx.find(p.substr(arrow + 2));
            if (a == idx.end() || b == idx.end()) throw InputError("kernel column '" + h + "' names an unknown compartment");
            sk.Phi(a->second, b->second) = to_series(c);
        } else if (auto n = bracket(h, "k"); !n.empty()) {
            sk.k[idx.at(n)] = to_series(c);
        } else if (auto n2 = bracket(h, "B0"); !n2.empty()) {
            sk.B0[idx.at(n2)] = to_series(c);
        } else if (auto n3 = bracket(h, "D0"); !n3.empty()) {
            sk.D0[idx.at(n3)] = to_series(c);
        } else {
            throw InputError("unknown kernel column '" + h + "'");
        }
    }
    sk.refresh_masses();
    return sk;
}

void write_kernels(const std::string& path, const KernelSet& ks) {
    const int nc = ks.count(), nn = ks.grid.nodes();
    std::vector<std::string> h{"t"};
    std::vector<Series> cols;
    for (int b = 0; b < nc; ++b)
        for (int a = 0; a < nc; ++a) {
            const MatSeries& g = ks.g(b, a);
            if (a == b || g.zero()) continue;
            for (int j = 0; j < g.cols; ++j)
                for (int i = 0; i < g.rows; ++i) {
                    h.push_back("G[" + ks.names[b] + "->" + ks.names[a] + "](" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
                    cols.push_back(g.entry(i, j, nn));
                }
        }
    for (int a = 0; a < nc; ++a) {
        const MatSeries& k = ks.K[a];
        if (k.zero()) continue;
        for (int j = 0; j < k.cols; ++j)
            for (int i = 0; i < k.rows; ++i) {
                h.push_back("K[" + ks.names[a] + "](" + std::to_string(i) + "," + std::to_string(j) + ")");
                cols.push_back(k.entry(i, j, nn));
            }
    }
    Mat m(nn, h.size());
    for (int i = 0; i < nn; ++i) m(i, 0) = ks.grid.t(i);
    for (size_t c = 0; c < cols.size(); ++c) m.col(c + 1) = cols[c];
    write_table(path, h, m);
}

Json mass_report_json(const std::vector<MassRow>& rows, const ScalarKernelSet& sk, const Mat* exact) {
    Json doc;
    Json comps = Json::array();
    for (const auto& r : rows) {
        Json row{{"compartment", r.name}, {"mass", r.mass}, {"deficit", r.deficit}, {"status", r.status}};
        if (!std::isnan(r.exact)) row["exact_mass"] = r.exact;
        comps.push_back(row);
    }
    doc["compartments"] = comps;
    Json pairs = Json::array();
    for (int a = 0; a < sk.count(); ++a)
        for (int b = 0; b < sk.count(); ++b)
            if (a != b && (sk.p(a, b) > 0.0 || (exact && (*exact)(a, b) > 0.0))) {
                Json row{{"from", sk.names[a]}, {"to", sk.names[b]}, {"p", sk.p(a, b)}};
                if (exact) row["p_exact"] = (*exact)(a, b);
                pairs.push_back(row);
            }
    doc["pairs"] = pairs;
    doc["t_max"] = sk.grid.t_max;
    doc["dt"] = sk.grid.dt;
    return doc;
}

void write_solution(const std::string& path, const RenewalSolution& sol) {
    const int nc = sol.count(), nn = sol.grid.nodes();
    std::vector<std::string> h{"t"};
    for (int a = 0; a < nc; ++a) h.push_back("N[" + sol.names[a] + "]");
    const std::string in = sol.scalar ? "B" : "S", out = sol.scalar ? "D" : "J";
    for (int a = 0; a < nc; ++a) h.push_back(in + "[" + sol.names[a] + "]");
    for (int a = 0; a < nc; ++a) h.push_back(out + "[" + sol.names[a] + "]");
    Mat m(nn, 1 + 3 * nc);
    for (int i = 0; i < nn; ++i) m(i, 0) = sol.grid.t(i);
    for (int a = 0; a < nc; ++a) {
        m.col(1 + a) = sol.N.col(a);
        m.col(1 + nc + a) = sol.influx(a);
        m.col(1 + 2 * nc + a) = sol.outflux(a);
    }
    write_table(path, h, m);
}

void write_age_density(const std::string& path, const AgeDensity& ad) {
    std::string s = "t\tcompartment\tage\tf\n";
    for (size_t a = 0; a < ad.f.size(); ++a) {
        const Mat& f = ad.f[a];
        for (Eigen::Index k = 0; k < f.rows(); ++k) {
            const double t = ad.grid.t(ad.snapshot_nodes[k]);
            for (Eigen::Index j = 0; j < f.cols(); ++j) {
                if (f(k, j) == 0.0) continue;
                s += fmt12(t) + "\t" + std::to_string(a) + "\t" + fmt12(ad.ages(j)) + "\t" + fmt12(f(k, j)) + "\n";
            }
        }
    }
    write_text_atomic(path, s);
}

Json phase_type_to_json(const PhaseTypeModel& model) {
    Json doc;
    doc["M"] = model.M;
    doc["rate"] = model.rate;
    doc["compartments"] = model.compartments;
    doc["total_distance"] = model.total_distance;
    doc["attained"] = model.attained;
    doc["distance"] = "bounded-Lipschitz";
    Json pairs = Json::array();
    for (const auto& p : model.pairs) {
        Json br = Json::array();
        for (const auto& b : p.branches) br.push_back({{"q", b.q}, {"m", b.m}});
        pairs.push_back({{"alpha", p.alpha}, {"beta", p.beta}, {"p", p.p}, {"distance", p.distance}, {"branches", br}});
    }
    doc["pairs"] = pairs;
    return doc;
}

PhaseTypeModel phase_type_from_json(const Json& doc) {
    PhaseTypeModel m;
    try {
        m.M = doc.at("M").get<int>();
        m.rate = doc.at("rate").get<double>();
        m.compartments = doc.at("compartments").get<std::vector<std::string>>();
        for (const auto& p : doc.at("pairs")) {
            PhaseTypePair pp;
            pp.alpha = p.at("alpha").get<std::string>();
            pp.beta = p.at("beta").get<std::string>();
            pp.p = p.at("p").get<double>();
            double qs = 0.0;
            for (const auto& b : p.at("branches")) {
                pp.branches.push_back({b.at("q").get<double>(), b.at("m").get<int>()});
                qs += pp.branches.back().q;
            }
            if (!pp.branches.empty() && std::abs(qs - 1.0) > 1e-9)
                throw InputError("branch weights of " + pp.alpha + "->" + pp.beta + " do not sum to 1");
            m.pairs.push_back(std::move(pp));
        }
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed phase-type document: ") + e.what());
    }
    return m;
}

}  // namespace rk
