// Writes the bundled synthetic benchmark (corpus.jsonl, topics.tsv,
// qrels.txt) into the given directory. Output depends only on the mock
// generator, the bundled instruction set and the constants below.
//
//   make_synthetic <out_dir> [seed]
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "generation.hpp"
#include "prompts.hpp"
#include "text.hpp"
#include "tokenizer.hpp"

namespace {

const std::vector<std::string> k_titles = {
    "glacier melt rates",        "violin bow rosin",          "sourdough starter feeding",
    "bicycle chain lubrication", "volcanic ash aviation",     "honeybee colony collapse",
    "tidal turbine blades",      "medieval castle sieges",    "coral reef bleaching",
    "chess opening gambits",     "comet tail brightness",     "coffee bean roasting",
    "marathon runner injuries",  "origami crane folding",     "desert locust swarms",
    "pottery kiln glazes",       "wildfire smoke exposure",   "vinyl record pressing",
    "antarctic krill harvest",   "lighthouse keeper diaries",
};

// One word per topic for the relevant documents that never use the query words.
const std::vector<std::string> k_hidden = {
    "icefield",  "fiddle",    "leaven",   "drivetrain", "tephra",    "apiary",    "tideway",
    "rampart",   "anthozoan", "checkmate", "nucleus",   "arabica",   "shinsplint", "papercraft",
    "acridid",   "stoneware", "cinder",   "turntable",  "euphausiid", "beacon",
};

const std::vector<std::string> k_filler = {
    "window",  "table",   "chair",   "garden",  "yellow",  "silver",  "pencil",   "basket",
    "ladder",  "blanket", "candle",  "mirror",  "carpet",  "pillow",  "bucket",   "hammer",
    "needle",  "thread",  "button",  "pocket",  "shelf",   "drawer",  "curtain",  "fence",
    "gate",    "bridge",  "tunnel",  "road",    "corner",  "street",  "village",  "harbor",
    "island",  "valley",  "hill",    "meadow",  "cloud",   "thunder", "breeze",   "shadow",
    "sunrise", "sunset",  "winter",  "summer",  "autumn",  "orange",  "purple",   "green",
    "quiet",   "gentle",  "rough",   "smooth",  "heavy",   "narrow",  "wide",     "ancient",
    "careful", "sudden",  "steady",  "little",  "large",   "round",   "square",   "wooden",
    "metal",   "stone",   "brick",   "rope",    "wheel",   "bottle",  "cup",      "plate",
    "spoon",   "fork",    "bread",   "cheese",  "apple",   "lemon",   "salt",     "pepper",
    "sugar",   "letter",  "ticket",  "parcel",  "stamp",   "clock",   "calendar", "notebook",
    "lamp",    "door",    "roof",    "wall",    "floor",   "stairs",  "attic",    "cellar",
    "balcony", "porch",   "yard",    "pond",    "path",    "trail",   "lantern",  "kettle",
    "teapot",  "jar",     "walk",    "carry",   "build",   "watch",   "listen",   "wait",
    "remember", "morning", "evening", "afternoon", "neighbor", "visitor", "stranger", "friend",
};

void fail(const std::string& message) {
  std::cerr << "make_synthetic: " << message << "\n";
  std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) fail("usage: make_synthetic <out_dir> [seed]");
  const std::filesystem::path out(argv[1]);
  const std::int64_t seed = argc > 2 ? std::atoll(argv[2]) : 42;
  std::filesystem::create_directories(out);

  const qrkit::Tokenizer tokenizer;
  const auto& vocab = qrkit::mock_vocabulary();
  const std::set<std::string> vocab_set(vocab.begin(), vocab.end());
  std::set<std::string> reserved(vocab_set);
  for (const auto& t : k_titles) {
    for (const auto& w : tokenizer.tokenize(t)) {
      if (vocab_set.count(w)) fail("topic word in mock vocabulary: " + w);
      if (!reserved.insert(w).second) fail("topic word reused: " + w);
    }
  }
  for (const auto& w : k_hidden) {
    if (!reserved.insert(w).second) fail("hidden word clashes: " + w);
  }
  for (const auto& w : k_filler) {
    if (tokenizer.tokenize(w) != std::vector<std::string>{w}) fail("filler word is a stopword: " + w);
    if (reserved.count(w)) fail("filler word clashes: " + w);
  }

  const auto set = qrkit::load_instruction_set("general");
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919 + 17);
  auto pick = [&](const std::vector<std::string>& pool) { return pool[rng() % pool.size()]; };
  auto filler = [&](std::size_t n) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(pick(k_filler));
    return words;
  };
  auto scatter = [&](std::vector<std::string> words, const std::vector<std::string>& extra) {
    for (const auto& w : extra) words.insert(words.begin() + static_cast<long>(rng() % (words.size() + 1)), w);
    return qrkit::text::join(words, " ");
  };

  std::string corpus, topics, qrels;
  for (std::size_t q = 0; q < k_titles.size(); ++q) {
    char qid[16];
    std::snprintf(qid, sizeof qid, "q%02zu", q + 1);
    topics += std::string(qid) + "\t" + k_titles[q] + "\n";
    const auto query_words = tokenizer.tokenize(k_titles[q]);

    // Expansion terms every instruction produces for this query.
    std::map<std::string, std::size_t> counts;
    for (const auto& instruction : set.instructions) {
      const auto prompt = qrkit::build_qr_prompt(instruction, k_titles[q], qrkit::PromptStyle::keyword_plain);
      const auto kws = qrkit::parse_keywords(qrkit::mock_complete(prompt, seed), qrkit::KeywordMode::comma);
      for (const auto& k : std::set<std::string>(kws.begin(), kws.end())) ++counts[k];
    }
    std::vector<std::string> planted;
    for (const auto& [term, n] : counts) {
      const bool own = std::find(query_words.begin(), query_words.end(), term) != query_words.end();
      if (n == set.size() && !own) planted.push_back(term);
    }
    const bool plant = q % 2 == 0;
    if (plant && planted.empty()) fail(std::string("no stable expansion terms for ") + qid);

    struct Doc {
      std::string text;
      int grade;
    };
    std::vector<Doc> docs;
    auto repeated = [](const std::vector<std::string>& words, int times) {
      std::vector<std::string> out;
      for (int i = 0; i < times; ++i) out.insert(out.end(), words.begin(), words.end());
      return out;
    };
    docs.push_back({scatter(filler(28 + rng() % 12), repeated(query_words, 2)), 2});
    docs.push_back({scatter(filler(34 + rng() % 12), query_words), 1});
    std::vector<std::string> hidden{k_hidden[q], k_hidden[q]};
    if (plant) {
      auto p = repeated(planted, 2);
      hidden.insert(hidden.end(), p.begin(), p.end());
    }
    docs.push_back({scatter(filler(26 + rng() % 12), hidden), 2});
    docs.push_back({scatter(filler(32 + rng() % 12), {k_hidden[q]}), 1});
    if (plant) docs.back().text = scatter(qrkit::text::split(docs.back().text, ' '), planted);
    docs.push_back({scatter(filler(30 + rng() % 12), {query_words.front()}), 0});
    docs.push_back({scatter(filler(30 + rng() % 12), {query_words.back()}), 0});

    for (std::size_t d = 0; d < docs.size(); ++d) {
      char doc_id[24];
      std::snprintf(doc_id, sizeof doc_id, "d%02zu_%zu", q + 1, d + 1);
      nlohmann::ordered_json j;
      j["doc_id"] = doc_id;
      j["text"] = docs[d].text;
      corpus += j.dump() + "\n";
      qrels += std::string(qid) + " 0 " + doc_id + " " + std::to_string(docs[d].grade) + "\n";
    }
  }
  qrkit::text::write_file_atomic((out / "corpus.jsonl").string(), corpus);
  qrkit::text::write_file_atomic((out / "topics.tsv").string(), topics);
  qrkit::text::write_file_atomic((out / "qrels.txt").string(), qrels);
  std::cout << "wrote " << k_titles.size() * 6 << " documents and " << k_titles.size()
            << " topics to " << out.string() << "\n";
  return 0;
}
