#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abset/rational.hpp"

namespace abset {

/// Bipartite topology of a candidate absorbing set, restricted to the set D
/// of variable nodes and its boundary check nodes. Left-regular with VN
/// degree 3: every VN appears exactly three times across all CN lists.
struct AbsorbingSetSpec {
  std::string name;
  int vn_count = 0;                                 // a
  std::vector<std::vector<int>> check_nodes;        // one VN list per boundary CN
  std::vector<std::pair<int, int>> message_order;   // optional explicit (vn, cn)

  int cn_count() const { return static_cast<int>(check_nodes.size()); }
};

struct ValidationReport {
  bool is_absorbing = false;
  bool is_elementary = false;
  int a = 0;
  int b = 0;                                        // |O(D)|, derived
  std::vector<int> even_cns;                        // E(D): CN ids with even degree
  std::vector<int> odd_cns;                         // O(D)
  std::vector<std::pair<int, int>> per_vn_even_odd; // (even, odd) boundary counts
  std::vector<std::string> failures;
};

/// The linear skeleton of the in-set message evolution: N internal directed
/// messages, an N x N routing matrix (one-VN-hop propagation) and an N x a
/// repetition matrix mapping channel values onto outgoing messages.
struct RoutingSystem {
  int n = 0;                                        // N = 2|E(D)|
  int vn_count = 0;                                 // a
  MatB routing;                                     // N x N, zero diagonal
  MatB repetition;                                  // N x a, unit row weight
  std::vector<std::pair<int, int>> message_index;   // message -> (vn, cn)
  std::vector<int> even_cn_ids;                     // ascending
};

/// Splits the routing matrix by check-node activation order: `prev` carries
/// the couplings read from the previous iteration, `curr` those read from
/// messages already updated within the same iteration. prev + curr = routing,
/// elementwise, both binary. Parallel scheduling is prev = routing, curr = 0.
struct SchedulePartition {
  bool parallel = true;
  std::vector<int> cn_order;                        // even CN ids; empty if parallel
  MatB prev;                                        // "A-bar"
  MatB curr;                                        // "A-underline"
};

struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", col " +
                           std::to_string(column) + ": " + what),
        line(line),
        column(column) {}
};

enum class CatalogFormat { Auto, Text, Json };

/// Parses one absorbing-set document. Message ordering defaults to
/// lexicographic (vn, cn) when no `order:` line is present.
AbsorbingSetSpec parse_spec(std::string_view text,
                            CatalogFormat format = CatalogFormat::Auto);

/// Parses a catalog: a concatenation of documents, each starting at a
/// `name:` line (text) or an array of objects (json).
std::vector<AbsorbingSetSpec> parse_catalog(std::string_view text,
                                            CatalogFormat format = CatalogFormat::Auto);

/// Serializes back to the text catalog format.
std::string to_catalog_text(const AbsorbingSetSpec& spec);

/// Diagnostic only: reports absorbing/elementary status and the E/O split,
/// never throws on a non-absorbing topology.
ValidationReport validate(const AbsorbingSetSpec& spec);

/// Compiles a validated elementary absorbing set into (routing, repetition).
/// routing(i,j) = 1 iff message j terminates, through its degree-2 even CN,
/// at the VN emitting message i, with the emitting edge excluded.
/// Throws std::invalid_argument if the spec is not an elementary absorbing set.
RoutingSystem build_routing(const AbsorbingSetSpec& spec);

SchedulePartition schedule_partition(const RoutingSystem& rs);  // parallel
SchedulePartition schedule_partition(const RoutingSystem& rs,
                                     const std::vector<int>& cn_order);

}  // namespace abset
