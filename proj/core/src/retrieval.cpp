#include "promptforge/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json_util.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

Corpus load_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError("corpus line " + std::to_string(line_no) +
                       ": malformed record");
    }
    const std::string locus = "corpus line " + std::to_string(line_no);
    corpus.passages.emplace_back(require_string(j, "doc_id", locus),
                                 require_string(j, "text", locus));
  }
  return corpus;
}

Corpus load_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  return load_corpus(in);
}

std::string query_template_name(QueryTemplate qt) {
  return qt == QueryTemplate::raw_input ? "raw_input" : "instruction_prefixed";
}

QueryTemplate query_template_from_name(std::string_view name) {
  if (name == "raw_input") return QueryTemplate::raw_input;
  if (name == "instruction_prefixed") return QueryTemplate::instruction_prefixed;
  throw ValidationError("unknown query template: " + std::string(name));
}

std::vector<std::string> index_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

namespace {

std::map<std::string, int> term_counts(std::string_view text) {
  std::map<std::string, int> tf;
  for (std::string& t : index_tokenize(text)) ++tf[t];
  return tf;
}

}  // namespace

Index build_index(const Corpus& corpus) {
  if (corpus.passages.empty()) {
    throw ValidationError("cannot build index over an empty corpus");
  }
  Index index;
  std::set<std::string> ids;
  std::map<std::string, int> df;
  std::vector<std::map<std::string, int>> tfs;
  tfs.reserve(corpus.passages.size());
  for (const auto& [id, text] : corpus.passages) {
    if (!ids.insert(id).second) {
      throw ValidationError("corpus: duplicate doc_id \"" + id + "\"");
    }
    tfs.push_back(term_counts(text));
    for (const auto& [term, _] : tfs.back()) ++df[term];
  }
  const double n_docs = static_cast<double>(corpus.passages.size());
  for (const auto& [term, count] : df) {
    index.idf_[term] = std::log(1.0 + n_docs / (1.0 + count));
  }
  for (std::size_t i = 0; i < corpus.passages.size(); ++i) {
    Index::DocEntry doc;
    doc.id = corpus.passages[i].first;
    doc.text = corpus.passages[i].second;
    double norm_sq = 0.0;
    for (const auto& [term, count] : tfs[i]) {
      const double w = count * index.idf_.at(term);
      doc.weights[term] = w;
      norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
      const double norm = std::sqrt(norm_sq);
      for (auto& [_, w] : doc.weights) w /= norm;
    }
    index.by_id_[doc.id] = i;
    index.docs_.push_back(std::move(doc));
  }
  return index;
}

double Index::idf(std::string_view term) const {
  auto it = idf_.find(std::string(term));
  return it == idf_.end() ? 0.0 : it->second;
}

double Index::doc_weight(const std::string& doc_id,
                         std::string_view term) const {
  auto it = by_id_.find(doc_id);
  if (it == by_id_.end()) throw ValidationError("unknown doc_id: " + doc_id);
  const auto& weights = docs_[it->second].weights;
  auto wi = weights.find(std::string(term));
  return wi == weights.end() ? 0.0 : wi->second;
}

const std::string& Index::passage(const std::string& doc_id) const {
  auto it = by_id_.find(doc_id);
  if (it == by_id_.end()) throw ValidationError("unknown doc_id: " + doc_id);
  return docs_[it->second].text;
}

std::vector<ScoredDoc> Index::retrieve(const std::string& query, int k) const {
  if (k <= 0) return {};
  std::map<std::string, double> qv;
  double q_norm_sq = 0.0;
  for (const auto& [term, count] : term_counts(query)) {
    auto it = idf_.find(term);
    if (it == idf_.end()) continue;  // unknown terms contribute nothing
    const double w = count * it->second;
    qv[term] = w;
    q_norm_sq += w * w;
  }
  const double q_norm = std::sqrt(q_norm_sq);
  std::vector<ScoredDoc> scored;
  scored.reserve(docs_.size());
  for (const DocEntry& doc : docs_) {
    double dot = 0.0;
    if (q_norm > 0.0) {
      for (const auto& [term, qw] : qv) {
        auto wi = doc.weights.find(term);
        if (wi != doc.weights.end()) dot += qw * wi->second;
      }
      dot /= q_norm;  // doc vectors are already unit norm
    }
    scored.push_back({doc.id, dot});
  }
  std::sort(scored.begin(), scored.end(),
            [](const ScoredDoc& a, const ScoredDoc& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.doc_id < b.doc_id;
            });
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k),
                                          scored.size());
  scored.resize(keep);
  return scored;
}

}  // namespace promptforge
