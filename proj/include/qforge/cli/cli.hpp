#pragma once

#include "qforge/backend/backend.hpp"
#include "qforge/error.hpp"
#include "qforge/evalsuite/suite.hpp"
#include "qforge/qec/pauli_frame.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace qforge::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_infrastructure = 1;
inline constexpr int exit_usage = 2;

inline constexpr std::uint64_t default_seed = 42;
inline constexpr const char* default_index_path = "qforge.index";
inline constexpr const char* default_suite_path = "data/suite/default.jsonl";
inline constexpr const char* default_corpus_path = "data/rag";
inline constexpr const char* default_exemplar_path = "data/exemplars";

/// Backend and process failures exit 1; every other error is bad input and exits 2.
int exit_code_for(ErrorCode code);

/// Backend selection:
///   scripted:allpass   every suite case answered by its reference solution
///   scripted:<file>    canned script (see ScriptedBackend::from_json)
///   http               OpenAI-compatible endpoint from the environment
///   record:<file>      http, with every call appended to a cassette
///   replay:<file>      served from a cassette, never touching the network
/// `suite` is needed only by scripted:allpass.
std::shared_ptr<backend::Backend> make_backend(const std::string& spec,
                                               const std::vector<evalsuite::TestCase>* suite = nullptr);

/// Side-by-side bar charts of outcome histograms, one panel per entry.
std::string render_histograms_svg(const std::vector<std::pair<std::string, qec::Histogram>>& panels);

/// Runs one command line (program name excluded). JSON goes to --out when
/// given, with a human summary on `out`; otherwise the JSON itself is
/// written to `out`. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qforge::cli
