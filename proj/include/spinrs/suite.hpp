#pragma once

#include <map>
#include <string>
#include <vector>

#include "spinrs/serialize.hpp"

namespace spinrs {

inline constexpr const char* kVersion = "0.1.0";

// Upper: pass iff rel <= tol. Lower: pass iff rel > tol (witnesses that must
// be nonzero). Integer: pass iff abs == 0.
enum class Bound { Upper, Lower, Integer };

struct CheckRecord {
    std::string name;
    std::string indices;
    std::string point_digest;
    double abs_residual = 0.0;
    double rel_residual = 0.0;
    Bound bound = Bound::Upper;
    double tolerance = 0.0;
    std::string expected;
    std::string detail;
    std::string reason;  // constituent error, if any
    bool pass = false;
};

// Per-record tolerances keyed by record name ("flows.match"); lookups fall
// back to the check name before the first dot.
class ToleranceRegistry {
public:
    static ToleranceRegistry defaults();

    double get(const std::string& name) const;
    // Throws InvalidParams for names that are not registered.
    void set(const std::string& name, double value);
    const std::map<std::string, double>& values() const { return values_; }

private:
    std::map<std::string, double> values_;
};

const std::vector<std::string>& registered_checks();

struct SuiteConfig {
    ModelParams params;
    int points = 10;
    std::vector<std::string> checks;  // empty: all registered checks
    int kmax = 0;                     // 0: n + 2
    std::vector<cplx> flow_times;     // empty: default times with |t| <= 1
    std::string output_dir;
    int workers = 1;
    ToleranceRegistry tolerances = ToleranceRegistry::defaults();

    // Throws InvalidParams on unknown checks or out-of-range fields.
    void validate() const;
    int effective_kmax() const { return kmax > 0 ? kmax : params.n + 2; }
    std::vector<cplx> effective_flow_times() const;
};

struct VerificationReport {
    std::vector<CheckRecord> records;
    int total = 0;
    int passed = 0;
    int failed = 0;
    json environment;

    bool all_passed() const { return failed == 0 && total > 0; }
};

// Deterministic for a given config; points are drawn once from params.seed and
// shared by every check, and each (check, point) task gets its own stream.
VerificationReport run_suite(const SuiteConfig& config);

// Fills tolerance, expected and pass from the registry.
void finalize(CheckRecord& r, const ToleranceRegistry& tol);

json to_json(const CheckRecord& r);
json to_json(const VerificationReport& report);

// One line per check name with the worst record.
std::string summary_text(const VerificationReport& report);

}  // namespace spinrs
