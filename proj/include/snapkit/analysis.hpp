#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snapkit/critical.hpp"
#include "snapkit/model.hpp"
#include "snapkit/pathtrack.hpp"

namespace snapkit {

enum class SolverKind { Auto, Newton, Homotopy };

std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

struct SolverOptions {
    SolverKind solver = SolverKind::Auto;  ///< Auto: homotopy for GL, Newton for CE
    NewtonOptions newton;
    CriticalHomotopyOptions homotopy;
    QuotientOptions quotient;
    TrackOptions track;
    double rank_tol = 1e-9;
    double endpoint_tol = 0.0;       ///< <= 0: 1e-6 times the diameter
    double max_deformation = 1e-3;   ///< largest relative edge residual accepted before polishing
    int constrained_starts = 64;     ///< random seeds for the constrained method
    double constrained_spread = 0.25;  ///< seed half-width in units of the diameter
};

/// Critical-point search result with the quotient set built from it.
struct CandidateSet {
    SolverKind solver = SolverKind::Newton;
    std::vector<CriticalPoint> points;
    QuotientSet quotient;
    std::optional<CriticalHomotopyStats> homotopy_stats;
    std::optional<NewtonStats> newton_stats;
};

CandidateSet find_candidates(const Framework& fw, const Configuration& cfg,
                             const SolverOptions& opts);

/// An undeformed, non-shaky configuration ready for analysis.
struct PreparedConfiguration {
    Configuration cfg;
    bool polished = false;
    double initial_residual = 0.0;  ///< max relative edge residual before polishing
    double final_residual = 0.0;
};

/// Checks the count condition, re-projects cfg onto the rest lengths and
/// rejects deformed or shaky input.
PreparedConfiguration prepare_configuration(const Framework& fw, const Configuration& cfg,
                                            const SolverOptions& opts);

enum class AnalysisMethod { Snappability, Thm3, Constrained };

std::string to_string(AnalysisMethod method);
AnalysisMethod analysis_method_from_string(const std::string& name);

struct AnalysisReport {
    AnalysisMethod method = AnalysisMethod::Snappability;
    bool infinite = true;
    double value = 0.0;
    Configuration witness;
    bool witness_is_shaky = false;
    std::string witness_classification;
    PathCertificate certificate;
    int candidates_examined = 0;
    int candidates_total = 0;
    bool low_confidence = false;
    PreparedConfiguration input;
    std::optional<CandidateSet> candidates;
    int constrained_converged = 0;   ///< KKT points found by the constrained method
    int constrained_rejected = 0;    ///< variety points without a path certificate
    bool constrained_random_hit = false;  ///< accepted point also reached from a random seed
};

/// s(k): candidates in ascending density, first with a path certificate wins.
AnalysisReport snappability(const Framework& fw, const Configuration& cfg,
                            const SolverOptions& opts);

/// Same, with a precomputed candidate set (the set does not depend on cfg).
AnalysisReport snappability(const Framework& fw, const Configuration& cfg,
                            const CandidateSet& candidates, const SolverOptions& opts);

/// sigma(k) through the identity with s(k) (Thm3) or by constrained
/// minimization of the density over the shakiness variety (Constrained).
AnalysisReport singularity_distance(const Framework& fw, const Configuration& cfg,
                                    AnalysisMethod method, const SolverOptions& opts);

/// {value|null, infinite, witness, method, candidates_examined, path_certificate, diagnostics}
nlohmann::json report_to_json(const AnalysisReport& report);
nlohmann::json certificate_to_json(const PathCertificate& cert);
nlohmann::json candidates_to_json(const CandidateSet& set);

struct VariantRow {
    std::string label;
    std::string file;
    StrainModel model = StrainModel::GL;
    SolverKind solver = SolverKind::Newton;
    long long tracked_paths = 0;
    int finite_solutions = 0;
    int real_critical_points = 0;
    int quotient_size = 0;
    AnalysisReport report;
};

struct VariantTable {
    std::vector<VariantRow> rows;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

VariantTable compare_variants(const std::vector<std::filesystem::path>& files,
                              const SolverOptions& opts);

}  // namespace snapkit
