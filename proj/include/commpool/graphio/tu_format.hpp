#pragma once

// Reader and writer for the TU benchmark flat-file layout:
//
//   <name>_A.txt                 "i, j" per line, 1-based global node ids
//   <name>_graph_indicator.txt   graph id (1-based) per node line
//   <name>_graph_labels.txt      one integer class label per graph
//   <name>_node_attributes.txt   optional, comma-separated reals per node
//   <name>_node_labels.txt       optional, one integer per node
//   <name>_community_labels.txt  optional sidecar, 0-based community per node

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "commpool/errors.hpp"
#include "commpool/graphio/graph.hpp"

namespace commpool::graphio {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view tok, const std::string& path, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(path, line, "cannot parse number '" + std::string(tok) + "'");
  return v;
}

// Non-blank lines paired with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IngestionError(p.string(), "cannot open file");
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!trim(line).empty()) out.emplace_back(no, std::move(line));
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline Dataset parse_tu_dataset(const std::filesystem::path& dir, const std::string& name) {
  namespace fs = std::filesystem;
  auto file = [&](const char* suffix) { return dir / (name + suffix); };
  for (const char* required : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt"})
    if (!fs::exists(file(required))) throw IngestionError(file(required).string(), "missing mandatory file");

  // node -> graph
  const std::string ind_path = file("_graph_indicator.txt").string();
  std::vector<std::size_t> node_graph;
  std::size_t graph_count = 0;
  for (const auto& [no, line] : detail::read_lines(ind_path)) {
    const auto g = detail::parse_number<long long>(detail::trim(line), ind_path, no);
    if (g < 1) throw ParseError(ind_path, no, "graph id must be >= 1");
    node_graph.push_back(static_cast<std::size_t>(g - 1));
    graph_count = std::max(graph_count, static_cast<std::size_t>(g));
  }
  const std::size_t total_nodes = node_graph.size();
  for (std::size_t i = 1; i < total_nodes; ++i)
    if (node_graph[i] < node_graph[i - 1])
      throw ParseError(ind_path, i + 1, "graph indicator must be non-decreasing");

  std::vector<std::size_t> first_node(graph_count + 1, total_nodes);
  std::vector<std::size_t> sizes(graph_count, 0);
  for (std::size_t i = total_nodes; i-- > 0;) first_node[node_graph[i]] = i;
  for (std::size_t g : node_graph) ++sizes[g];
  for (std::size_t g = 0; g < graph_count; ++g)
    if (sizes[g] == 0) throw ParseError(ind_path, 0, "graph " + std::to_string(g + 1) + " has no nodes");

  // graph labels, remapped to 0-based contiguous
  const std::string lab_path = file("_graph_labels.txt").string();
  std::vector<long long> raw_labels;
  for (const auto& [no, line] : detail::read_lines(lab_path))
    raw_labels.push_back(detail::parse_number<long long>(detail::trim(line), lab_path, no));
  if (raw_labels.size() != graph_count)
    throw ParseError(lab_path, raw_labels.size(), "expected " + std::to_string(graph_count) + " graph labels");
  std::map<long long, int> label_map;
  for (long long l : raw_labels) label_map.emplace(l, 0);
  int next = 0;
  for (auto& [k, v] : label_map) v = next++;

  Dataset ds;
  ds.name = name;
  ds.class_count = label_map.size();
  ds.graphs.resize(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) {
    ds.graphs[g].adjacency = Matrix(sizes[g], sizes[g]);
    ds.graphs[g].label = label_map.at(raw_labels[g]);
  }

  const std::string a_path = file("_A.txt").string();
  for (const auto& [no, line] : detail::read_lines(a_path)) {
    auto toks = detail::split_commas(line);
    if (toks.size() != 2) throw ParseError(a_path, no, "expected 'i, j'");
    const auto u = detail::parse_number<long long>(toks[0], a_path, no);
    const auto v = detail::parse_number<long long>(toks[1], a_path, no);
    if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total_nodes || static_cast<std::size_t>(v) > total_nodes)
      throw ParseError(a_path, no, "node index out of range");
    const std::size_t a = static_cast<std::size_t>(u - 1), b = static_cast<std::size_t>(v - 1);
    if (node_graph[a] != node_graph[b]) throw ParseError(a_path, no, "edge crosses graphs");
    const std::size_t base = first_node[node_graph[a]];
    ds.graphs[node_graph[a]].add_edge(a - base, b - base);
  }

  // features: attributes, else one-hot node labels, else normalized degree
  const fs::path attr_file = file("_node_attributes.txt");
  const fs::path nlab_file = file("_node_labels.txt");
  std::vector<std::vector<double>> rows;
  if (fs::exists(attr_file)) {
    ds.feature_source = FeatureSource::node_attributes;
    const std::string path = attr_file.string();
    std::optional<std::size_t> width;
    for (const auto& [no, line] : detail::read_lines(path)) {
      auto toks = detail::split_commas(line);
      if (width && toks.size() != *width) throw ParseError(path, no, "ragged attribute row");
      width = toks.size();
      std::vector<double> r;
      for (auto t : toks) r.push_back(detail::parse_number<double>(t, path, no));
      rows.push_back(std::move(r));
    }
    if (rows.size() != total_nodes) throw ParseError(path, rows.size(), "attribute rows != node count");
    ds.feature_dim = width.value_or(0);
  } else if (fs::exists(nlab_file)) {
    ds.feature_source = FeatureSource::node_labels;
    const std::string path = nlab_file.string();
    std::vector<long long> nl;
    for (const auto& [no, line] : detail::read_lines(path))
      nl.push_back(detail::parse_number<long long>(detail::split_commas(line).front(), path, no));
    if (nl.size() != total_nodes) throw ParseError(path, nl.size(), "node label rows != node count");
    std::map<long long, std::size_t> idx;
    for (long long l : nl) idx.emplace(l, 0);
    std::size_t k = 0;
    for (auto& [l, i] : idx) i = k++;
    ds.feature_dim = idx.size();
    for (long long l : nl) {
      std::vector<double> r(ds.feature_dim, 0.0);
      r[idx.at(l)] = 1.0;
      rows.push_back(std::move(r));
    }
  } else {
    ds.feature_source = FeatureSource::degree;
    ds.feature_dim = 1;
    std::size_t max_deg = 0;
    for (const auto& g : ds.graphs)
      for (std::size_t i = 0; i < g.node_count(); ++i) max_deg = std::max(max_deg, g.degree(i));
    for (std::size_t i = 0; i < total_nodes; ++i) {
      const Graph& g = ds.graphs[node_graph[i]];
      const double d = static_cast<double>(g.degree(i - first_node[node_graph[i]]));
      rows.push_back({max_deg == 0 ? 0.0 : d / static_cast<double>(max_deg)});
    }
  }
  for (std::size_t g = 0; g < graph_count; ++g) {
    Matrix h(sizes[g], ds.feature_dim);
    for (std::size_t i = 0; i < sizes[g]; ++i)
      for (std::size_t c = 0; c < ds.feature_dim; ++c) h(i, c) = rows[first_node[g] + i][c];
    ds.graphs[g].features = std::move(h);
  }

  const fs::path comm_file = file("_community_labels.txt");
  if (fs::exists(comm_file)) {
    const std::string path = comm_file.string();
    std::vector<int> cl;
    for (const auto& [no, line] : detail::read_lines(path))
      cl.push_back(detail::parse_number<int>(detail::trim(line), path, no));
    if (cl.size() != total_nodes) throw ParseError(path, cl.size(), "community rows != node count");
    for (std::size_t g = 0; g < graph_count; ++g)
      ds.graphs[g].communities = std::vector<int>(cl.begin() + static_cast<std::ptrdiff_t>(first_node[g]),
                                                  cl.begin() + static_cast<std::ptrdiff_t>(first_node[g] + sizes[g]));
  }
  return ds;
}

// Writes the dataset back in TU layout: both directions of every edge,
// features as node attributes, labels as stored (already 0-based), and the
// community sidecar when every graph carries ground truth.
inline void write_tu_dataset(const Dataset& ds, const std::filesystem::path& dir, const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* suffix) {
    const fs::path p = dir / (name + suffix);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IngestionError(p.string(), "cannot open for writing");
    return out;
  };
  auto a = open("_A.txt");
  auto ind = open("_graph_indicator.txt");
  auto lab = open("_graph_labels.txt");
  auto attr = open("_node_attributes.txt");
  std::size_t base = 0;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& gr = ds.graphs[g];
    const std::size_t n = gr.node_count();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        if (gr.has_edge(i, j)) a << (base + i + 1) << ", " << (base + j + 1) << '\n';
      ind << (g + 1) << '\n';
      for (std::size_t c = 0; c < gr.feature_dim(); ++c)
        attr << (c ? ", " : "") << detail::format_double(gr.features(i, c));
      attr << '\n';
    }
    lab << gr.label.value_or(0) << '\n';
    base += n;
  }
  if (ds.has_communities()) {
    auto comm = open("_community_labels.txt");
    for (const auto& g : ds.graphs)
      for (int c : *g.communities) comm << c << '\n';
  }
}

}  // namespace commpool::graphio
