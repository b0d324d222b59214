#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "promptforge/errors.hpp"
#include "promptforge/retrieval.hpp"
#include "support.hpp"

namespace {

pf::Corpus toy_corpus() {
  pf::Corpus c;
  c.passages = {{"d1", "cats purr"}, {"d2", "dogs bark"},
                {"d3", "cats and dogs"}};
  return c;
}

}  // namespace

TEST_CASE("index_tokenize lowercases, splits, and drops short tokens") {
  using tokens = std::vector<std::string>;
  CHECK(pf::index_tokenize("Cats purr!") == tokens{"cats", "purr"});
  CHECK(pf::index_tokenize("a I x yz") == tokens{"yz"});
  CHECK(pf::index_tokenize("foo-bar_baz") == tokens{"foo", "bar", "baz"});
  CHECK(pf::index_tokenize("room 42b") == tokens{"room", "42b"});
  CHECK(pf::index_tokenize("") == tokens{});
  CHECK(pf::index_tokenize("...") == tokens{});
}

TEST_CASE("idf follows ln(1 + N/(1 + df))") {
  pf::Index idx = pf::build_index(toy_corpus());
  REQUIRE(idx.doc_count() == 3);
  // "cats" appears in 2 of 3 docs, "purr" in 1
  CHECK(idx.idf("cats") == doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(idx.idf("purr") == doctest::Approx(0.9162907318741551).epsilon(1e-15));
  CHECK(idx.idf("absent") == 0.0);
}

TEST_CASE("doc vectors are unit length") {
  pf::Index idx = pf::build_index(toy_corpus());
  for (const std::string id : {"d1", "d2", "d3"}) {
    double sq = 0.0;
    for (const std::string& t :
         {"cats", "purr", "dogs", "bark", "and"}) {
      const double w = idx.doc_weight(id, t);
      sq += w * w;
    }
    CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(idx.doc_weight("d1", "dogs") == 0.0);
  CHECK(idx.passage("d3") == "cats and dogs");
  CHECK_THROWS_AS(idx.passage("d9"), pf::ValidationError);
}

TEST_CASE("retrieval scores match the pinned cosine table") {
  pf::Index idx = pf::build_index(toy_corpus());

  auto r1 = idx.retrieve("cats", 3);
  REQUIRE(r1.size() == 3);
  CHECK(r1[0].doc_id == "d1");
  CHECK(r1[0].score == doctest::Approx(0.6032976484396253).epsilon(1e-12));
  CHECK(r1[1].doc_id == "d3");
  CHECK(r1[1].score == doctest::Approx(0.5165704194494654).epsilon(1e-12));
  CHECK(r1[2].doc_id == "d2");
  CHECK(r1[2].score == 0.0);

  auto r2 = idx.retrieve("cats and dogs", 3);
  REQUIRE(r2.size() == 3);
  CHECK(r2[0].doc_id == "d3");
  CHECK(r2[0].score == doctest::Approx(1.0).epsilon(1e-12));
  // d1 and d2 score identically; ties break by ascending doc_id
  CHECK(r2[1].doc_id == "d1");
  CHECK(r2[2].doc_id == "d2");
  CHECK(r2[1].score == r2[2].score);
  CHECK(r2[1].score == doctest::Approx(0.3116457193073333).epsilon(1e-12));
}

TEST_CASE("top-k lists are prefixes of larger k") {
  pf::Index idx = pf::build_index(toy_corpus());
  auto full = idx.retrieve("cats and dogs", 3);
  for (int k = 1; k < 3; ++k) {
    auto partial = idx.retrieve("cats and dogs", k);
    REQUIRE(partial.size() == static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      CHECK(partial[i].doc_id == full[i].doc_id);
      CHECK(partial[i].score == full[i].score);
    }
  }
  CHECK(idx.retrieve("cats", 0).empty());
  CHECK(idx.retrieve("cats", 99).size() == 3);  // k clamps to N
}

TEST_CASE("each passage retrieves itself first") {
  pf::Corpus c = toy_corpus();
  pf::Index idx = pf::build_index(c);
  for (const auto& [id, text] : c.passages) {
    auto top = idx.retrieve(text, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].doc_id == id);
  }
}

TEST_CASE("a query with no index terms yields zero scores in id order") {
  pf::Index idx = pf::build_index(toy_corpus());
  auto r = idx.retrieve("zzz qqq", 3);
  REQUIRE(r.size() == 3);
  CHECK(r[0].doc_id == "d1");
  CHECK(r[1].doc_id == "d2");
  CHECK(r[2].doc_id == "d3");
  for (const auto& s : r) CHECK(s.score == 0.0);
}

TEST_CASE("query template names round-trip") {
  CHECK(pf::query_template_name(pf::QueryTemplate::raw_input) == "raw_input");
  CHECK(pf::query_template_name(pf::QueryTemplate::instruction_prefixed) ==
        "instruction_prefixed");
  CHECK(pf::query_template_from_name("raw_input") ==
        pf::QueryTemplate::raw_input);
  CHECK(pf::query_template_from_name("instruction_prefixed") ==
        pf::QueryTemplate::instruction_prefixed);
  CHECK_THROWS_AS(pf::query_template_from_name("fancy"), pf::ValidationError);
}

TEST_CASE("corpora load from JSONL and reject bad rows") {
  std::istringstream in(
      "{\"doc_id\":\"a\",\"text\":\"alpha\"}\n"
      "\n"
      "{\"doc_id\":\"b\",\"text\":\"beta\"}\n");
  pf::Corpus c = pf::load_corpus(in);
  REQUIRE(c.passages.size() == 2);
  CHECK(c.passages[0].first == "a");
  CHECK(c.passages[1].second == "beta");

  std::istringstream bad("{\"doc_id\":\"a\"}\n");
  CHECK_THROWS_AS(pf::load_corpus(bad), pf::ValidationError);
  std::istringstream garbled("{\"doc_id\":\"a\",\"text\":\"x\"}\n{oops\n");
  CHECK_THROWS_WITH_AS(pf::load_corpus(garbled), doctest::Contains("line 2"),
                       pf::ParseError);
  CHECK_THROWS_AS(pf::load_corpus_file("/nonexistent/corpus.jsonl"),
                  pf::ParseError);

  pf::Corpus dup;
  dup.passages = {{"d1", "x"}, {"d1", "y"}};
  CHECK_THROWS_WITH_AS(pf::build_index(dup), doctest::Contains("duplicate"),
                       pf::ValidationError);
}

TEST_CASE("the checked-in corpus fixtures build and answer") {
  pf::Corpus toy = pf::load_corpus_file(fixture("corpus_toy.jsonl"));
  pf::Index toy_idx = pf::build_index(toy);
  CHECK(toy_idx.doc_count() == 3);
  CHECK(toy_idx.idf("cats") ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));

  pf::Corpus c = pf::load_corpus_file(fixture("qa_corpus.jsonl"));
  pf::Index idx = pf::build_index(c);
  CHECK(idx.doc_count() == c.passages.size());
  auto top = idx.retrieve("capital of france", 1);
  REQUIRE(top.size() == 1);
  CHECK(idx.passage(top[0].doc_id).find("paris") != std::string::npos);
}
