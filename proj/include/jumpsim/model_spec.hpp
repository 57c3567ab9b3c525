#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "jumpsim/models.hpp"

namespace jumpsim {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key = value text with dotted sections; '#' starts a comment.
// Every key must be consumed by the reader, so typos fail loudly.
class SpecFile {
public:
    static SpecFile parse_file(const std::string& path);
    static SpecFile parse_text(const std::string& text,
                               const std::string& origin = "<memory>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;

    // Throws ValidationError naming any key never read.
    void assert_fully_consumed() const;

    // FNV-1a over the sorted canonical "key=value" lines.
    std::uint64_t content_hash() const;
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> kv_;
    std::map<std::string, int> line_of_;
    mutable std::set<std::string> consumed_;
    std::string origin_;
};

// What a model file can describe: either a spatial model or a finite
// count-process fixture for the solver.
struct ModelSpec {
    std::optional<SpatialModel> spatial;
    std::optional<FiniteKernel> finite;
    // Initial condition for simulation commands.
    enum class Init { fixed_count, poisson, state_index } init_kind =
        Init::fixed_count;
    int init_count = 1;
    double init_box = 1.0;       // half-width of the uniform initial box
    double init_intensity = 1.0; // poisson mass over the box
    int init_state = 0;          // finite kernels
    std::uint64_t hash = 0;
    std::string name;

    Configuration draw_initial(Rng& rng) const;
};

ModelSpec load_model(const std::string& path);
ModelSpec model_from_spec(SpecFile& spec);

enum class Command { simulate, moments, solve, verify, sweep, cluster_stats };
enum class OutFormat { csv, jsonl };

struct RunConfig {
    Command command = Command::simulate;
    std::string model_path;
    double s = 0.0;
    double t = 1.0;
    long long replicates = 100;
    std::uint64_t seed = 0;
    std::string out_path;  // empty = stdout
    OutFormat format = OutFormat::jsonl;
    // solver params
    double step = 1e-3;
    int n_terms = 64;
    int truncation = 64;
    // verify selection: subset of {B, D, E, doob, moments, xcheck}
    std::vector<std::string> verify;
    // optional declared-constant overrides (counter-case fixtures)
    std::optional<double> constant_B;
    std::optional<double> constant_D;
    // moments command time grid
    int time_points = 20;
    // sweep: vary one scalar key of the model file over a range
    std::string sweep_key;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_points = 0;
    // cluster-stats
    long long draws = 100000;
    int workers = 1;
    std::uint64_t config_hash = 0;
};

RunConfig parse_config(const std::string& path);
RunConfig config_from_spec(SpecFile& spec, const std::string& base_dir);

std::string command_name(Command c);

}  // namespace jumpsim
