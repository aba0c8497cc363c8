#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include <pks/solver.hpp>

namespace pks::io {

// 64-bit FNV-1a content digest, reported as 16 hex digits.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

// Registry of every CSV column and JSON field the tool may emit, keyed by
// artifact file name. JSON fields are dotted paths, `[]` marks array items,
// a trailing `*` documents a free-form subtree (config echo, timings).
// Writers refuse undocumented fields; write_schema dumps the registry.
const std::map<std::string, std::map<std::string, std::string>>& field_docs();
void write_schema(const std::string& path);

// CSV with one header row; values are printed with %.17g so numeric
// round-trips are bit-exact.
void write_csv(const std::string& path, const std::string& artifact,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
Csv read_csv(const std::string& path);

// JSON artifact write with the same documentation check (leaf paths only).
void write_json(const std::string& path, const std::string& artifact,
                const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

struct RunManifest {
    std::string artifact_version;
    std::string subcommand;
    long seed = 0;
    std::map<std::string, std::string> config;           // echoed, defaults filled
    std::vector<std::pair<std::string, std::string>> files;  // name -> digest
    std::map<std::string, double> timings_s;             // excluded from determinism
};
void write_manifest(const std::string& path, const RunManifest& m);

// Plain-text full-precision checkpoint of an evolution state.
struct Checkpoint {
    double rmin = 0.0, rmax = 0.0;
    int n = 0;
    sim::SimState state;  // state.grid is left null; rebind after loading
};
void write_checkpoint(const std::string& path, const num::RadialGrid& g,
                      const sim::SimState& st);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace pks::io
