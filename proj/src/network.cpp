#include "renewalkit/network.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace rk {

int ReactionNetwork::index(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (states[i] == name) return i;
    throw InputError("unknown state '" + name + "'");
}

ReactionNetwork validate_network(const std::vector<std::string>& states,
                                 const std::vector<RateEntry>& rates) {
    std::map<std::string, int> idx;
    for (const auto& s : states) {
        if (!idx.emplace(s, static_cast<int>(idx.size())).second)
            throw InputError("duplicate state '" + s + "'");
    }
    ReactionNetwork net;
    net.states = states;
    const int n = static_cast<int>(states.size());
    net.A = Mat::Zero(n, n);
    for (const auto& r : rates) {
        auto f = idx.find(r.from);
        auto t = idx.find(r.to);
        if (f == idx.end()) throw InputError("rate " + r.from + "->" + r.to + ": unknown state '" + r.from + "'");
        if (t == idx.end()) throw InputError("rate " + r.from + "->" + r.to + ": unknown state '" + r.to + "'");
        if (!std::isfinite(r.rate) || r.rate < 0.0) {
            std::ostringstream os;
            os << "negative rate " << r.rate << " on edge " << r.from << "->" << r.to;
            throw InputError(os.str());
        }
        if (f->second == t->second) throw InputError("self-loop edge on state '" + r.from + "'");
        net.A(t->second, f->second) += r.rate;
    }
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            if (i != j) s += net.A(i, j);
        net.A(j, j) = -s;
    }
    return net;
}

ReactionNetwork network_from_matrix(const std::vector<std::string>& states, const Mat& A) {
    const int n = static_cast<int>(states.size());
    if (A.rows() != n || A.cols() != n) throw InputError("generator size does not match state list");
    std::set<std::string> seen(states.begin(), states.end());
    if (static_cast<int>(seen.size()) != n) throw InputError("duplicate state names");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (i != j && A(i, j) < 0.0) {
                std::ostringstream os;
                os << "negative off-diagonal A(" << states[i] << "," << states[j] << ")";
                throw InputError(os.str());
            }
        }
        if (std::abs(A.col(j).sum()) > 1e-12 * scale * n)
            throw InputError("column " + states[j] + " does not sum to zero");
    }
    return ReactionNetwork{states, A};
}

int CompartmentSystem::find(const std::string& name) const {
    for (int a = 0; a < count(); ++a)
        if (comps[a].name == name) return a;
    return -1;
}

Mat CompartmentSystem::block(int a, int b) const {
    const auto& ra = comps[a].states;
    const auto& cb = comps[b].states;
    Mat out(ra.size(), cb.size());
    for (size_t i = 0; i < ra.size(); ++i)
        for (size_t j = 0; j < cb.size(); ++j) out(i, j) = network.A(ra[i], cb[j]);
    return out;
}

Vec CompartmentSystem::exit_rates(int a) const {
    const auto& st = comps[a].states;
    Vec c = Vec::Zero(st.size());
    for (size_t j = 0; j < st.size(); ++j) {
        for (int i = 0; i < network.size(); ++i)
            if (comp_of[i] != a) c(j) += network.A(i, st[j]);
    }
    return c;
}

Mat CompartmentSystem::E(int a) const {
    Mat e = block(a, a);
    e.diagonal() += exit_rates(a);
    return e;
}

int CompartmentSystem::reference_local(int a) const {
    const auto& ent = comps[a].entrances;
    if (ent.empty()) return 0;
    if (ent.size() > 1) return -1;
    return local[ent[0]];
}

static std::string join_names(const ReactionNetwork& net, const std::vector<int>& st) {
    std::string s;
    for (size_t i = 0; i < st.size(); ++i) {
        if (i) s += "+";
        s += net.states[st[i]];
    }
    return s;
}

CompartmentSystem decompose_indices(const ReactionNetwork& net,
                                    const std::vector<std::vector<int>>& partition,
                                    const std::vector<std::string>& names) {
    if (!names.empty() && names.size() != partition.size())
        throw InputError("compartment name list does not match partition");
    const int n = net.size();
    CompartmentSystem sys;
    sys.network = net;
    sys.comp_of.assign(n, -1);
    sys.local.assign(n, -1);
    for (size_t a = 0; a < partition.size(); ++a) {
        if (partition[a].empty()) throw InputError("empty compartment in partition");
        Compartment c;
        c.states = partition[a];
        for (size_t k = 0; k < c.states.size(); ++k) {
            int s = c.states[k];
            if (s < 0 || s >= n) throw InputError("partition references unknown state");
            if (sys.comp_of[s] != -1) throw InputError("overlapping blocks: state '" + net.states[s] + "' appears twice");
            sys.comp_of[s] = static_cast<int>(a);
            sys.local[s] = static_cast<int>(k);
        }
        c.name = names.empty() ? join_names(net, c.states) : names[a];
        sys.comps.push_back(std::move(c));
    }
    for (int s = 0; s < n; ++s)
        if (sys.comp_of[s] == -1) throw InputError("partition does not cover state '" + net.states[s] + "'");
    for (auto& c : sys.comps) {
        for (int i : c.states) {
            bool entrance = false;
            for (int j = 0; j < n && !entrance; ++j)
                if (sys.comp_of[j] != sys.comp_of[i] && net.A(i, j) > 0.0) entrance = true;
            if (entrance) c.entrances.push_back(i);
        }
    }
    return sys;
}

CompartmentSystem decompose(const ReactionNetwork& net,
                            const std::vector<std::vector<std::string>>& partition,
                            const std::vector<std::string>& names) {
    std::vector<std::vector<int>> idx;
    for (const auto& block : partition) {
        std::vector<int> b;
        for (const auto& s : block) b.push_back(net.index(s));
        idx.push_back(std::move(b));
    }
    return decompose_indices(net, idx, names);
}

CompartmentSystem singleton_partition(const ReactionNetwork& net) {
    std::vector<std::vector<int>> p;
    for (int i = 0; i < net.size(); ++i) p.push_back({i});
    return decompose_indices(net, p);
}

std::vector<EntranceVerdict> check_one_entrance(const CompartmentSystem& sys) {
    std::vector<EntranceVerdict> out;
    for (const auto& c : sys.comps) {
        EntranceVerdict v;
        v.states = c.entrances;
        if (c.entrances.empty()) {
            v.kind = EntranceKind::None;
        } else if (c.entrances.size() == 1) {
            v.kind = EntranceKind::Unique;
            v.state = c.entrances[0];
        } else {
            v.kind = EntranceKind::Multiple;
        }
        out.push_back(std::move(v));
    }
    return out;
}

bool one_entrance_ok(const CompartmentSystem& sys) {
    for (const auto& c : sys.comps)
        if (c.entrances.size() > 1) return false;
    return true;
}

bool strongly_connected(const Mat& pattern) {
    // pattern(i,j) > 0 means an edge j -> i.
    const int n = static_cast<int>(pattern.rows());
    if (n <= 1) return true;
    auto reach = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                double w = forward ? pattern(v, u) : pattern(u, v);
                if (v != u && w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        for (char c : seen)
            if (!c) return false;
        return true;
    };
    return reach(true) && reach(false);
}

bool network_strongly_connected(const ReactionNetwork& net) { return strongly_connected(net.A); }

DetailedBalanceCertificate detect_detailed_balance(const ReactionNetwork& net, double tol) {
    const int n = net.size();
    if (!network_strongly_connected(net))
        throw InputError("detailed balance: network is not strongly connected, stationary vector is not unique");
    DetailedBalanceCertificate cert;
    cert.tolerance = tol;
    if (n == 1) {
        cert.mu = Vec::Ones(1);
        cert.present = true;
        return cert;
    }
    Eigen::JacobiSVD<Mat> svd(net.A, Eigen::ComputeFullV);
    Vec mu = svd.matrixV().col(n - 1);
    if (mu.sum() < 0) mu = -mu;
    if (mu.minCoeff() <= 0.0) throw NumericError("detailed balance: null vector has non-positive entries");
    mu /= mu.sum();
    cert.mu = mu;
    double res = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            res = std::max(res, std::abs(net.A(i, j) * mu(j) - net.A(j, i) * mu(i)));
    cert.residual = res;
    double max_rate = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) max_rate = std::max(max_rate, net.A(i, j));
    cert.present = res <= tol * std::max(max_rate, 1e-300);
    return cert;
}

}  // namespace rk
