#pragma once

#include <map>
#include <string>
#include <vector>

namespace pks::cfg {

// Flat key = value map. Files use an INI-like layout: `[section]` headers
// prefix the keys that follow ("[grid]" + "n = 4096" -> "grid.n"), `#` or `;`
// start a comment, blank lines are skipped.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

// Applies `key=value` command-line overrides on top of the file values.
void apply_overrides(KeyValues& kv, const std::vector<std::string>& sets);

enum class ValueKind { real, count, flag, text, real_list };

struct FieldSpec {
    ValueKind kind = ValueKind::real;
    std::string default_value;  // empty + required -> must be provided
    bool required = false;
    std::string doc;
};

using Schema = std::map<std::string, FieldSpec>;

// Schema of the given subcommand (profile | ode | simulate | spectral |
// report). Unknown subcommand throws ConfigError.
const Schema& schema_for(const std::string& subcommand);

// Checks every key against the schema (unknown keys are rejected with a
// nearest-key suggestion), type-checks the values, and returns the map with
// defaults filled in, ready to be echoed into the manifest.
KeyValues validate(const std::string& subcommand, const KeyValues& kv);

// Typed accessors; the key must exist in the map (call validate() first).
double as_real(const KeyValues& kv, const std::string& key);
long as_count(const KeyValues& kv, const std::string& key);
bool as_flag(const KeyValues& kv, const std::string& key);
const std::string& as_text(const KeyValues& kv, const std::string& key);
std::vector<double> as_reals(const KeyValues& kv, const std::string& key);

// Edit distance used for the unknown-key suggestions.
int levenshtein(const std::string& a, const std::string& b);

}  // namespace pks::cfg
