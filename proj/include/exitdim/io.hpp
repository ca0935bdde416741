#pragma once

#include <string>

#include "exitdim/exit.hpp"
#include "exitdim/exponent.hpp"
#include "exitdim/graph.hpp"
#include "exitdim/kernel.hpp"
#include "exitdim/net.hpp"
#include "exitdim/space.hpp"
#include "json.hpp"

namespace exitdim {

// nlohmann::json keeps object keys in sorted order, which the canonical
// writer below relies on for bit-stable output.
using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Binary snapshots. Fixed little-endian layout, exact bit round trip for all
// floating-point payloads. Failures (missing file, bad magic, truncation,
// inconsistent sizes) throw InvalidArgument naming the path.
// ---------------------------------------------------------------------------

void write_space(const std::string& path, const FiniteSpace& space);
FiniteSpace read_space(const std::string& path);

void write_kernel(const std::string& path, const WalkKernel& kernel);
WalkKernel read_kernel(const std::string& path);

// ---------------------------------------------------------------------------
// JSON forms of the lightweight artifacts (nets, graphs, fits, series).
// Each *_from_json validates structure and throws InvalidArgument on
// missing/ill-typed fields.
// ---------------------------------------------------------------------------

Json net_to_json(const NetIndex& net);
NetIndex net_from_json(const Json& j);

// Self-contained: embeds the net; edges are unordered pairs of global point
// ids (each pair once, lower id first; self-loops as [a, a]).
Json graph_to_json(const ApproxGraph& graph);
ApproxGraph graph_from_json(const Json& j);

Json fit_to_json(const ExponentFit& fit);
ExponentFit fit_from_json(const Json& j);

Json series_to_json(const ScaleSeries& series);
ScaleSeries series_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Canonical text output: object keys sorted, every float printed with %.17g
// (17 significant digits, exact round trip), non-finite floats as null,
// 2-space indentation, LF newlines. Serializing the same document twice
// yields byte-identical text.
// ---------------------------------------------------------------------------

std::string canonical_json(const Json& j);

// canonical_json + trailing newline, written atomically-ish via ofstream.
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// CSV exports. Fixed column order (documented in README), %.17g floats,
// LF newlines, header always present.
// ---------------------------------------------------------------------------

// id,x,y,weight,diameter  (y = 0 for 1-d spaces)
void write_points_csv(const std::string& path, const FiniteSpace& space);

// row,col,value  (global point ids; one line per stored kernel entry)
void write_kernel_csv(const std::string& path, const WalkKernel& kernel);

// id,phi  (every kernel state; phi = 0 outside the region)
void write_exit_csv(const std::string& path, const WalkKernel& kernel, const ExitField& field);

// scale,value  (descending scales)
void write_series_csv(const std::string& path, const ScaleSeries& series);

}  // namespace exitdim
