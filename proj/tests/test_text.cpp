#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "rng.hpp"
#include "support/distant_fixture.hpp"
#include "text.hpp"
#include "util.hpp"

using namespace emo2vec;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("emo2vec_text_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string join_ws(const std::vector<std::string>& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize basic examples") {
  CHECK(tokenize("You are giving me a headache") ==
        std::vector<std::string>{"you", "are", "giving", "me", "a", "headache"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("I'm SAD!! #sadness") ==
        std::vector<std::string>{"i", "'", "m", "sad", "!", "!", "#sadness"});
}

TEST_CASE("tokenize keeps hashtags and mentions whole") {
  CHECK(tokenize("ask @Bob!? about #FunTimes!") ==
        std::vector<std::string>{"ask", "@bob!?", "about", "#funtimes!"});
  CHECK(tokenize("(hello), world...") ==
        std::vector<std::string>{"(", "hello", ")", ",", "world", ".", ".", "."});
  CHECK(tokenize("   \t \n ").empty());
  for (const std::string& tok : tokenize("a,b:c;d")) CHECK(!tok.empty());
}

TEST_CASE("tokenize of a token join is idempotent") {
  Rng rng(101);
  const std::string alphabet = "abcxyz#@.!?'(),;:\" ";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const std::size_t len = rng.next_index(40);
    for (std::size_t i = 0; i < len; ++i) {
      text += alphabet[rng.next_index(alphabet.size())];
    }
    const auto once = tokenize(text);
    CHECK(tokenize(join_ws(once)) == once);
  }
}

TEST_CASE("distant_label accepts a clean trailing-hashtag document") {
  std::unordered_map<std::string, int> map = {{"angry", 2}};
  auto got = distant_label("today everything went wrong again #angry", map);
  REQUIRE(got.has_value());
  CHECK(got->label == 2);
  CHECK(got->cleaned == "today everything went wrong again");
}

TEST_CASE("distant_label filter rules") {
  std::unordered_map<std::string, int> map = {{"joy", 0}, {"angry", 2}};
  CHECK(!distant_label("so happy see http://x.co #joy", map).has_value());
  CHECK(!distant_label("bad day #angry", map).has_value());
  CHECK(!distant_label("she said \"fine\" whatever today ok #angry", map).has_value());
  CHECK(!distant_label("totally fine day but no tag", map).has_value());
  CHECK(!distant_label("tag #joy is not at end", map).has_value());
  CHECK(!distant_label("perfectly long sentence with unknown tag #meh", map).has_value());
  CHECK(!distant_label("", map).has_value());
  CHECK(!distant_label("#joy", map).has_value());
}

TEST_CASE("distant_label length rejection is monotone under token removal") {
  std::unordered_map<std::string, int> map = {{"joy", 0}};
  std::vector<std::string> words = {"one", "two", "three", "four"};
  // 4 cleaned tokens is rejected; so is every shorter suffix.
  while (!words.empty()) {
    std::string text = join_ws(words) + " #joy";
    CHECK(!distant_label(text, map).has_value());
    words.pop_back();
  }
}

TEST_CASE("distant_label fixture of fifty documents") {
  const auto map = testsupport::distant_fixture_map();
  const auto cases = testsupport::distant_fixture();
  REQUIRE(cases.size() == 50);
  std::size_t accepted = 0;
  for (const auto& c : cases) {
    auto got = distant_label(c.text, map);
    INFO("document: ", c.text);
    if (c.label < 0) {
      CHECK(!got.has_value());
    } else {
      REQUIRE(got.has_value());
      CHECK(got->label == c.label);
      CHECK(got->cleaned == c.cleaned);
      ++accepted;
    }
  }
  CHECK(accepted == 20);
}

TEST_CASE("build_vocab ids follow frequency with lexicographic ties") {
  std::vector<std::vector<std::string>> docs = {{"a", "b", "a"}};
  Vocabulary v = build_vocab(docs, 1);
  CHECK(v.size() == 4);
  CHECK(v.id_of("a") == 2);
  CHECK(v.id_of("b") == 3);

  Vocabulary v2 = build_vocab(docs, 2);
  CHECK(v2.size() == 3);
  CHECK(v2.contains("a"));
  CHECK(!v2.contains("b"));

  Vocabulary v3 = build_vocab({}, 1);
  CHECK(v3.size() == 2);

  // same count ties broken lexicographically
  std::vector<std::vector<std::string>> tied = {{"zeta", "beta", "alpha"}};
  Vocabulary v4 = build_vocab(tied, 1);
  CHECK(v4.id_of("alpha") == 2);
  CHECK(v4.id_of("beta") == 3);
  CHECK(v4.id_of("zeta") == 4);
}

TEST_CASE("encode maps unknowns, pads, and truncates") {
  Vocabulary v = build_vocab({{"a"}}, 1);
  EncodedSentence s = encode({"a", "z"}, v, 4);
  CHECK(s.ids == std::vector<int>{2, 1, 0, 0});
  CHECK(s.true_len == 2);

  EncodedSentence empty = encode({}, v, 4);
  CHECK(empty.ids == std::vector<int>{0, 0, 0, 0});
  CHECK(empty.true_len == 0);

  EncodedSentence cut = encode({"a", "a", "a", "a", "a"}, v, 3);
  CHECK(cut.ids.size() == 3);
  CHECK(cut.true_len == 3);
}

TEST_CASE("vocab with min_count 1 never encodes to UNK on its own corpus") {
  Rng rng(131);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<std::string>> docs;
    const std::size_t ndocs = 1 + rng.next_index(6);
    for (std::size_t d = 0; d < ndocs; ++d) {
      std::vector<std::string> doc;
      const std::size_t len = 1 + rng.next_index(8);
      for (std::size_t i = 0; i < len; ++i) {
        doc.push_back("tok" + std::to_string(rng.next_index(12)));
      }
      docs.push_back(doc);
    }
    Vocabulary v = build_vocab(docs, 1);
    for (const auto& doc : docs) {
      EncodedSentence s = encode(doc, v, doc.size());
      for (std::size_t i = 0; i < s.true_len; ++i) {
        CHECK(s.ids[i] != Vocabulary::kUnkId);
        CHECK(s.ids[i] != Vocabulary::kPadId);
      }
    }
  }
}

namespace {

std::vector<LabeledDocument> numbered_docs(std::size_t n) {
  std::vector<LabeledDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back({"doc number " + std::to_string(i), static_cast<int>(i % 2)});
  }
  return docs;
}

}  // namespace

TEST_CASE("split_dataset sizes and determinism") {
  auto docs = numbered_docs(100);
  Dataset d = split_dataset(docs, {"a", "b"}, {0.7, 0.15, 0.15}, 1, "x");
  CHECK(d.train.size() == 70);
  CHECK(d.dev.size() == 15);
  CHECK(d.test.size() == 15);

  auto small = numbered_docs(10);
  Dataset d10 = split_dataset(small, {"a", "b"}, {0.7, 0.15, 0.15}, 1, "x");
  CHECK(d10.train.size() == 8);  // remainder goes to train
  CHECK(d10.dev.size() == 1);
  CHECK(d10.test.size() == 1);

  Dataset again = split_dataset(docs, {"a", "b"}, {0.7, 0.15, 0.15}, 1, "x");
  CHECK(again.train == d.train);
  CHECK(again.dev == d.dev);
  CHECK(again.test == d.test);

  Dataset other_seed = split_dataset(docs, {"a", "b"}, {0.7, 0.15, 0.15}, 2, "x");
  CHECK(other_seed.train != d.train);
}

TEST_CASE("split_dataset rejects bad input") {
  auto docs = numbered_docs(2);
  CHECK_THROWS_WITH_AS(split_dataset(docs, {"a", "b"}, {0.7, 0.15, 0.15}, 1),
                       "dataset too small to split", std::runtime_error);
  auto more = numbered_docs(10);
  CHECK_THROWS_AS(split_dataset(more, {"a", "b"}, {0.5, 0.25, 0.3}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(more, {"a", "b"}, {1.0, -0.1, 0.1}, 1),
                  std::invalid_argument);
}

TEST_CASE("split_dataset parts are disjoint and exhaustive for every seed") {
  auto docs = numbered_docs(53);
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 99ull, 12345ull}) {
    Dataset d = split_dataset(docs, {"a", "b"}, {0.7, 0.15, 0.15}, seed, "x");
    std::multiset<std::string> seen;
    for (const auto* part : {&d.train, &d.dev, &d.test}) {
      for (const auto& doc : *part) seen.insert(doc.text);
    }
    std::multiset<std::string> want;
    for (const auto& doc : docs) want.insert(doc.text);
    CHECK(seen == want);
  }
}

TEST_CASE("labeled file round trip with interned labels") {
  fs::path dir = temp_dir();
  fs::path file = dir / "data.tsv";
  write_file(file, "joy\tgreat day\n");
  LabeledFile lf = load_labeled_file(file);
  REQUIRE(lf.docs.size() == 1);
  CHECK(lf.label_names == std::vector<std::string>{"joy"});
  CHECK(lf.docs[0].label == 0);
  CHECK(lf.docs[0].text == "great day");

  write_file(file, "");
  CHECK(load_labeled_file(file).docs.empty());

  write_file(file, "nolabel\n");
  try {
    load_labeled_file(file);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }

  std::vector<LabeledDocument> docs = {
      {"first doc", 0}, {"second doc", 1}, {"third doc", 0}};
  std::vector<std::string> names = {"neg", "pos"};
  save_labeled_file(docs, names, file);
  LabeledFile back = load_labeled_file(file);
  CHECK(back.docs == docs);
  CHECK(back.label_names == names);
  fs::remove_all(dir);
}

TEST_CASE("load_labeled_file_with_labels pins the label order") {
  fs::path dir = temp_dir();
  fs::path file = dir / "data.tsv";
  write_file(file, "pos\tgood one\nneg\tbad one\n");
  auto docs = load_labeled_file_with_labels(file, {"neg", "pos"});
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].label == 1);
  CHECK(docs[1].label == 0);
  CHECK_THROWS_AS(load_labeled_file_with_labels(file, {"neg"}), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("invalid utf8 in a labeled file is rejected with a line number") {
  fs::path dir = temp_dir();
  fs::path file = dir / "bad.tsv";
  std::string content = "joy\tok line\n";
  content += "joy\tbroken \xFF byte\n";
  write_file(file, content);
  try {
    load_labeled_file(file);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("save_labeled_file flattens tabs and newlines in text") {
  fs::path dir = temp_dir();
  fs::path file = dir / "san.tsv";
  save_labeled_file({{"line\twith\nbreaks", 0}}, {"joy"}, file);
  LabeledFile back = load_labeled_file(file);
  REQUIRE(back.docs.size() == 1);
  CHECK(back.docs[0].text == "line with breaks");
  fs::remove_all(dir);
}

TEST_CASE("hashtag map file loads with interned emotion names") {
  fs::path dir = temp_dir();
  fs::path file = dir / "map.tsv";
  write_file(file, "happy\tjoy\nsmile\tjoy\nfuming\tanger\n");
  HashtagMap map = load_hashtag_map(file);
  CHECK(map.label_names == std::vector<std::string>{"joy", "anger"});
  CHECK(map.tag_to_label.at("happy") == 0);
  CHECK(map.tag_to_label.at("smile") == 0);
  CHECK(map.tag_to_label.at("fuming") == 1);
  fs::remove_all(dir);
}

TEST_CASE("label_distribution reports counts and fractions") {
  std::vector<LabeledDocument> docs = {
      {"a", 0}, {"b", 0}, {"c", 1}, {"d", 2}};
  auto stats = label_distribution(docs, {"joy", "sadness", "anger"});
  REQUIRE(stats.size() == 3);
  CHECK(stats[0].count == 2);
  CHECK(stats[0].fraction == doctest::Approx(0.5));
  CHECK(stats[1].count == 1);
  CHECK(stats[2].fraction == doctest::Approx(0.25));
}
