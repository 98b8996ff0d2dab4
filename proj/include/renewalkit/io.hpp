#pragma once

#include "renewalkit/kernels.hpp"
#include "renewalkit/network.hpp"
#include "renewalkit/phasetype.hpp"
#include "renewalkit/renewal.hpp"
#include "renewalkit/spe.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace rk {

using Json = nlohmann::json;

// Network document: {"states": [...], "rates": [{"from","to","rate"}], "partition": [[...]],
// optional "compartment_names": [...], optional "initial": {state: amount}}.
// Generator convention: A(to, from) = rate, columns sum to zero.
struct NetworkFile {
    ReactionNetwork network;
    std::vector<std::vector<std::string>> partition;
    std::vector<std::string> compartment_names;
    Vec n0;  // zero when "initial" is absent

    CompartmentSystem system() const;
};

NetworkFile parse_network(const Json& doc);
NetworkFile read_network_file(const std::string& path);
Json network_to_json(const ReactionNetwork& net, const std::vector<std::vector<int>>& partition,
                     const std::vector<std::string>& names);

// 12 significant digits.
std::string fmt12(double x);
// Rounds every number to 12 significant digits before serialization.
double round12(double x);

// Write to path.tmp and rename.
void write_text_atomic(const std::string& path, const std::string& text);
void write_json(const std::string& path, const Json& doc);
void write_table(const std::string& path, const std::vector<std::string>& headers, const Mat& rows);
Json read_json(const std::string& path);

// Scalar kernels as one table: t, Phi[a->b] (a != b), k[a], B0[a], D0[a].
void write_scalar_kernels(const std::string& path, const ScalarKernelSet& sk);
ScalarKernelSet read_scalar_kernels(const std::string& path);
// General kernels: t, G[b->a](i,j), K[a](i,j).
void write_kernels(const std::string& path, const KernelSet& ks);

Json mass_report_json(const std::vector<MassRow>& rows, const ScalarKernelSet& sk, const Mat* exact = nullptr);
void write_solution(const std::string& path, const RenewalSolution& sol);
// Long format: t, compartment, age, f.
void write_age_density(const std::string& path, const AgeDensity& ad);

Json phase_type_to_json(const PhaseTypeModel& model);
PhaseTypeModel phase_type_from_json(const Json& doc);

}  // namespace rk
