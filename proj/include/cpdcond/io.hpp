#pragma once

#include "cpdcond/conditioning.hpp"
#include "cpdcond/core.hpp"
#include "cpdcond/decomp.hpp"
#include "cpdcond/lab.hpp"
#include "cpdcond/scaling_group.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace cpdcond {

// Decomposition file: {"dims":[n1,...,nd],"rank":r,"factors":[M1,...,Md]},
// factor k encoded as a list of r columns of n_k numbers each.
// Tensor file: {"dims":[...],"values":[...]} in Kronecker order.
// Doubles are emitted with shortest-round-trip decimals.

Factors read_decomposition(const std::string& path);
void write_decomposition(const std::string& path, const Factors& factors);
std::string decomposition_to_string(const Factors& factors);

DenseTensor read_tensor(const std::string& path);
void write_tensor(const std::string& path, const DenseTensor& t);
std::string tensor_to_string(const DenseTensor& t);

nlohmann::json report_to_json(const ConditionReport& report);
nlohmann::json distance_to_json(const DistanceResult& result);
nlohmann::json isl_to_json(const IslResult& result);
nlohmann::json kruskal_to_json(const KruskalInfo& info);

/// Row-major CSV with 17 significant digits per entry.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

/// Header: s,backward,forward_proxy,orbit_forward,kappa,bound,warned,solver_failed
void write_error_rows_csv(std::ostream& os, const std::vector<ErrorRow>& rows);

}  // namespace cpdcond
