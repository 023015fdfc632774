#include "abset/asgraph.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace abset {

namespace {

constexpr int kVnDegree = 3;

struct Cursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1;
};

// Splits a line into whitespace-separated tokens, dropping `#` comments.
// Returns tokens with their 1-based column.
std::vector<std::pair<std::string, int>> tokenize(std::string_view line) {
  std::vector<std::pair<std::string, int>> out;
  size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    out.emplace_back(std::string(line.substr(start, i - start)),
                     static_cast<int>(start) + 1);
  }
  return out;
}

int parse_int(const std::string& tok, int line, int col) {
  size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(line, col, "expected integer, got '" + tok + "'");
  }
  if (used != tok.size())
    throw ParseError(line, col, "expected integer, got '" + tok + "'");
  return value;
}

void check_spec(const AbsorbingSetSpec& spec, int line) {
  if (spec.vn_count <= 0) throw ParseError(line, 1, "missing or invalid vns count");
  std::vector<int> degree(spec.vn_count, 0);
  for (size_t c = 0; c < spec.check_nodes.size(); ++c) {
    std::set<int> seen;
    for (int v : spec.check_nodes[c]) {
      if (v < 0 || v >= spec.vn_count)
        throw ParseError(line, 1,
                         "VN index " + std::to_string(v) + " out of range in cn " +
                             std::to_string(c));
      if (!seen.insert(v).second)
        throw ParseError(line, 1,
                         "duplicate edge: cn " + std::to_string(c) + " lists VN " +
                             std::to_string(v) + " twice");
      ++degree[v];
    }
  }
  for (int v = 0; v < spec.vn_count; ++v) {
    if (degree[v] != kVnDegree)
      throw ParseError(line, 1,
                       "degree violation: VN " + std::to_string(v) + " has degree " +
                           std::to_string(degree[v]) + ", expected 3");
  }
  if (!spec.message_order.empty()) {
    // The explicit order must enumerate exactly the incidences of degree-2 CNs.
    std::set<std::pair<int, int>> expected;
    for (size_t c = 0; c < spec.check_nodes.size(); ++c)
      if (spec.check_nodes[c].size() == 2)
        for (int v : spec.check_nodes[c]) expected.emplace(v, static_cast<int>(c));
    std::set<std::pair<int, int>> given(spec.message_order.begin(),
                                        spec.message_order.end());
    if (given.size() != spec.message_order.size())
      throw ParseError(line, 1, "order: repeated vn:cn pair");
    if (given != expected)
      throw ParseError(line, 1,
                       "order: must list every vn:cn incidence of the degree-2 CNs "
                       "exactly once");
  }
}

std::vector<AbsorbingSetSpec> parse_text_catalog(std::string_view text) {
  std::vector<AbsorbingSetSpec> out;
  std::optional<AbsorbingSetSpec> cur;
  int line_no = 0;
  int doc_start_line = 1;
  std::istringstream stream{std::string(text)};
  std::string raw;

  auto flush = [&] {
    if (cur) {
      check_spec(*cur, doc_start_line);
      out.push_back(std::move(*cur));
      cur.reset();
    }
  };

  while (std::getline(stream, raw)) {
    ++line_no;
    auto toks = tokenize(raw);
    if (toks.empty()) continue;
    const auto& [key, col] = toks[0];
    auto need_current = [&]() -> AbsorbingSetSpec& {
      if (!cur) throw ParseError(line_no, col, "'" + key + "' before any name:");
      return *cur;
    };
    if (key == "name:") {
      if (toks.size() != 2)
        throw ParseError(line_no, col, "name: expects one identifier");
      flush();
      cur.emplace();
      cur->name = toks[1].first;
      doc_start_line = line_no;
    } else if (key == "vns:") {
      if (toks.size() != 2) throw ParseError(line_no, col, "vns: expects one integer");
      need_current().vn_count = parse_int(toks[1].first, line_no, toks[1].second);
    } else if (key == "cn:") {
      if (toks.size() < 3)
        throw ParseError(line_no, col, "cn: expects at least two VN indices");
      std::vector<int> vns;
      for (size_t i = 1; i < toks.size(); ++i)
        vns.push_back(parse_int(toks[i].first, line_no, toks[i].second));
      need_current().check_nodes.push_back(std::move(vns));
    } else if (key == "odd:") {
      if (toks.size() != 2) throw ParseError(line_no, col, "odd: expects one VN index");
      need_current().check_nodes.push_back(
          {parse_int(toks[1].first, line_no, toks[1].second)});
    } else if (key == "order:") {
      auto& spec = need_current();
      for (size_t i = 1; i < toks.size(); ++i) {
        const auto& [tok, tcol] = toks[i];
        auto colon = tok.find(':');
        if (colon == std::string::npos)
          throw ParseError(line_no, tcol, "order: expects vn:cn pairs");
        spec.message_order.emplace_back(
            parse_int(tok.substr(0, colon), line_no, tcol),
            parse_int(tok.substr(colon + 1), line_no, tcol));
      }
    } else {
      throw ParseError(line_no, col, "unknown directive '" + key + "'");
    }
  }
  flush();
  if (out.empty()) throw ParseError(line_no, 1, "no AS found");
  return out;
}

AbsorbingSetSpec spec_from_json(const nlohmann::json& j) {
  AbsorbingSetSpec spec;
  spec.name = j.value("name", std::string{});
  spec.vn_count = j.at("vns").get<int>();
  for (const auto& cn : j.at("cns")) spec.check_nodes.push_back(cn.get<std::vector<int>>());
  if (j.contains("odd"))
    for (const auto& v : j.at("odd")) spec.check_nodes.push_back({v.get<int>()});
  if (j.contains("order"))
    for (const auto& p : j.at("order"))
      spec.message_order.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  check_spec(spec, 1);
  return spec;
}

std::vector<AbsorbingSetSpec> parse_json_catalog(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, 1, std::string("json: ") + e.what());
  }
  std::vector<AbsorbingSetSpec> out;
  try {
    if (j.is_array())
      for (const auto& item : j) out.push_back(spec_from_json(item));
    else
      out.push_back(spec_from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, 1, std::string("json: ") + e.what());
  }
  if (out.empty()) throw ParseError(1, 1, "no AS found");
  return out;
}

CatalogFormat sniff(std::string_view text, CatalogFormat format) {
  if (format != CatalogFormat::Auto) return format;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    return (ch == '{' || ch == '[') ? CatalogFormat::Json : CatalogFormat::Text;
  }
  return CatalogFormat::Text;
}

}  // namespace

std::vector<AbsorbingSetSpec> parse_catalog(std::string_view text, CatalogFormat format) {
  return sniff(text, format) == CatalogFormat::Json ? parse_json_catalog(text)
                                                    : parse_text_catalog(text);
}

AbsorbingSetSpec parse_spec(std::string_view text, CatalogFormat format) {
  auto all = parse_catalog(text, format);
  if (all.size() != 1)
    throw ParseError(1, 1, "expected a single AS document, found " +
                               std::to_string(all.size()));
  return std::move(all.front());
}

std::string to_catalog_text(const AbsorbingSetSpec& spec) {
  std::ostringstream os;
  os << "name: " << spec.name << "\n";
  os << "vns: " << spec.vn_count << "\n";
  for (const auto& cn : spec.check_nodes) {
    if (cn.size() == 1) {
      os << "odd: " << cn[0] << "\n";
    } else {
      os << "cn:";
      for (int v : cn) os << ' ' << v;
      os << "\n";
    }
  }
  if (!spec.message_order.empty()) {
    os << "order:";
    for (const auto& [v, c] : spec.message_order) os << ' ' << v << ':' << c;
    os << "\n";
  }
  return os.str();
}

ValidationReport validate(const AbsorbingSetSpec& spec) {
  ValidationReport rep;
  rep.a = spec.vn_count;
  rep.per_vn_even_odd.assign(spec.vn_count, {0, 0});
  rep.is_elementary = true;
  for (int c = 0; c < spec.cn_count(); ++c) {
    const auto& vns = spec.check_nodes[c];
    const bool even = vns.size() % 2 == 0;
    (even ? rep.even_cns : rep.odd_cns).push_back(c);
    for (int v : vns) (even ? rep.per_vn_even_odd[v].first : rep.per_vn_even_odd[v].second)++;
    if (vns.size() > 2) {
      rep.is_elementary = false;
      rep.failures.push_back("cn " + std::to_string(c) + " connects to D " +
                             std::to_string(vns.size()) + " times (non-elementary)");
    }
  }
  rep.b = static_cast<int>(rep.odd_cns.size());
  rep.is_absorbing = true;
  for (int v = 0; v < spec.vn_count; ++v) {
    auto [even, odd] = rep.per_vn_even_odd[v];
    if (even <= odd) {
      rep.is_absorbing = false;
      rep.failures.push_back("vn " + std::to_string(v) + ": " + std::to_string(even) +
                             " even vs " + std::to_string(odd) +
                             " odd boundary CNs (needs strictly more even)");
    }
  }
  return rep;
}

RoutingSystem build_routing(const AbsorbingSetSpec& spec) {
  const auto rep = validate(spec);
  if (!rep.is_absorbing || !rep.is_elementary) {
    std::string why;
    for (const auto& f : rep.failures) why += (why.empty() ? "" : "; ") + f;
    throw std::invalid_argument("not an elementary absorbing set: " + why);
  }

  RoutingSystem rs;
  rs.vn_count = spec.vn_count;
  rs.even_cn_ids = rep.even_cns;

  // Messages: one per (vn, even degree-2 cn) incidence.
  if (spec.message_order.empty()) {
    for (int v = 0; v < spec.vn_count; ++v)
      for (int c : rep.even_cns)
        for (int u : spec.check_nodes[c])
          if (u == v) rs.message_index.emplace_back(v, c);
  } else {
    rs.message_index = spec.message_order;
  }
  rs.n = static_cast<int>(rs.message_index.size());

  // partner(v, c): the other VN of the degree-2 CN c.
  auto partner = [&](int v, int c) {
    const auto& vns = spec.check_nodes[c];
    return vns[0] == v ? vns[1] : vns[0];
  };
  std::map<std::pair<int, int>, int> index_of;
  for (int i = 0; i < rs.n; ++i) index_of[rs.message_index[i]] = i;

  rs.routing = MatB::Zero(rs.n, rs.n);
  rs.repetition = MatB::Zero(rs.n, spec.vn_count);
  for (int i = 0; i < rs.n; ++i) {
    auto [v, ci] = rs.message_index[i];
    rs.repetition(i, v) = 1;
    // Incoming extrinsic support of message i: for each other even CN c of v,
    // the message sent toward v by the partner VN across c.
    for (int c : rep.even_cns) {
      if (c == ci) continue;
      const auto& vns = spec.check_nodes[c];
      if (std::find(vns.begin(), vns.end(), v) == vns.end()) continue;
      rs.routing(i, index_of.at({partner(v, c), c})) = 1;
    }
  }
  return rs;
}

SchedulePartition schedule_partition(const RoutingSystem& rs) {
  SchedulePartition sp;
  sp.parallel = true;
  sp.prev = rs.routing;
  sp.curr = MatB::Zero(rs.n, rs.n);
  return sp;
}

SchedulePartition schedule_partition(const RoutingSystem& rs,
                                     const std::vector<int>& cn_order) {
  if (std::set<int>(cn_order.begin(), cn_order.end()) !=
      std::set<int>(rs.even_cn_ids.begin(), rs.even_cn_ids.end()))
    throw std::invalid_argument("cn_order is not a permutation of the even CN ids");

  std::map<int, int> position;
  for (size_t k = 0; k < cn_order.size(); ++k) position[cn_order[k]] = static_cast<int>(k);

  SchedulePartition sp;
  sp.parallel = false;
  sp.cn_order = cn_order;
  sp.prev = MatB::Zero(rs.n, rs.n);
  sp.curr = MatB::Zero(rs.n, rs.n);
  for (int i = 0; i < rs.n; ++i)
    for (int j = 0; j < rs.n; ++j)
      if (rs.routing(i, j)) {
        const bool j_before_i =
            position.at(rs.message_index[j].second) < position.at(rs.message_index[i].second);
        (j_before_i ? sp.curr : sp.prev)(i, j) = 1;
      }
  return sp;
}

}  // namespace abset
