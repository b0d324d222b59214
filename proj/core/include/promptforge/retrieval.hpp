#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace promptforge {

struct Corpus {
  std::vector<std::pair<std::string, std::string>> passages;  // (doc_id, text)
};

// JSONL, one {"doc_id","text"} object per line
Corpus load_corpus(std::istream& in);
Corpus load_corpus_file(const std::string& path);

enum class QueryTemplate { raw_input, instruction_prefixed };

std::string query_template_name(QueryTemplate qt);
QueryTemplate query_template_from_name(std::string_view name);

struct RetrievalParams {
  int k = 0;  // 0 disables retrieval
  QueryTemplate query_template = QueryTemplate::raw_input;

  bool operator==(const RetrievalParams&) const = default;
};

struct ScoredDoc {
  std::string doc_id;
  double score;
};

// lowercase, split on non-alphanumeric, drop tokens shorter than 2
std::vector<std::string> index_tokenize(std::string_view text);

// tf-idf with idf(t) = ln(1 + N/(1 + df)), doc vectors L2-normalized
class Index {
 public:
  std::size_t doc_count() const { return docs_.size(); }
  double idf(std::string_view term) const;
  // normalized weight of term in doc, 0 if absent (exposed for tests)
  double doc_weight(const std::string& doc_id, std::string_view term) const;
  const std::string& passage(const std::string& doc_id) const;

  // cosine against the query tf-idf vector; score descending, ties by
  // ascending doc_id; min(k, N) results, k=0 -> empty
  std::vector<ScoredDoc> retrieve(const std::string& query, int k) const;

 private:
  friend Index build_index(const Corpus& corpus);

  struct DocEntry {
    std::string id;
    std::string text;
    std::map<std::string, double> weights;  // unit L2 norm (or empty doc)
  };
  std::vector<DocEntry> docs_;
  std::map<std::string, double> idf_;
  std::map<std::string, std::size_t> by_id_;
};

Index build_index(const Corpus& corpus);

inline std::vector<ScoredDoc> retrieve(const Index& index,
                                       const std::string& query, int k) {
  return index.retrieve(query, k);
}

}  // namespace promptforge
