#include "scglove/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace scglove {
namespace {

enum class DocKind { stereotyped, counter, mentions, plain };

std::string numbered(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, n);
  return buf;
}

class Generator {
 public:
  explicit Generator(const SyntheticCorpusConfig& config)
      : config_(config), rng_(config.seed), spec_(weat1_spec()) {
    for (std::size_t t = 0; t < config.topics; ++t) {
      std::vector<std::string> words;
      for (std::size_t w = 0; w < config.words_per_topic; ++w) {
        words.push_back(numbered("t", t, 2) + numbered("w", w, 2));
      }
      topics_.push_back(std::move(words));
    }
    for (std::size_t f = 0; f < config.filler_words; ++f) filler_.push_back(numbered("g", f, 3));
    const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    for (std::size_t r = 0; r < config.grid_rows; ++r) {
      std::vector<std::string> words;
      for (std::size_t k = 0; k < config.context_words_per_line; ++k) {
        words.push_back("row" + std::to_string(r) + letters[k % letters.size()]);
      }
      row_context_.push_back(std::move(words));
    }
    for (std::size_t c = 0; c < config.grid_cols; ++c) {
      std::vector<std::string> words;
      for (std::size_t k = 0; k < config.context_words_per_line; ++k) {
        words.push_back("col" + std::to_string(c) + letters[k % letters.size()]);
      }
      col_context_.push_back(std::move(words));
    }
    for (const auto* set : {&spec_.S, &spec_.T, &spec_.A, &spec_.B}) {
      weat_words_.insert(weat_words_.end(), set->begin(), set->end());
    }
  }

  SyntheticCorpus run() {
    SyntheticCorpus corpus;
    corpus.spec = spec_;
    for (auto kind : doc_kinds()) corpus.documents.push_back(document(kind));
    for (std::size_t r1 = 0; r1 < config_.grid_rows; ++r1) {
      for (std::size_t r2 = 0; r2 < config_.grid_rows; ++r2) {
        if (r1 == r2) continue;
        for (std::size_t c1 = 0; c1 < config_.grid_cols; ++c1) {
          for (std::size_t c2 = 0; c2 < config_.grid_cols; ++c2) {
            if (c1 == c2) continue;
            corpus.analogies.push_back({cell(r1, c1), cell(r1, c2), cell(r2, c1), cell(r2, c2)});
          }
        }
      }
    }
    return corpus;
  }

 private:
  static std::string cell(std::size_t r, std::size_t c) {
    return "r" + std::to_string(r) + "c" + std::to_string(c);
  }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(uniform_index(rng_, n)); }
  double unit() { return uniform_unit(rng_); }
  const std::string& pick_from(const std::vector<std::string>& words) { return words[pick(words.size())]; }

  std::vector<DocKind> doc_kinds() {
    const auto count = [&](double fraction) {
      return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(config_.num_docs)));
    };
    std::vector<DocKind> kinds;
    kinds.insert(kinds.end(), count(config_.stereotyped_fraction), DocKind::stereotyped);
    kinds.insert(kinds.end(), count(config_.counter_fraction), DocKind::counter);
    kinds.insert(kinds.end(), count(config_.mention_fraction), DocKind::mentions);
    kinds.resize(std::min(kinds.size(), config_.num_docs));
    kinds.resize(config_.num_docs, DocKind::plain);
    shuffle(kinds, rng_);
    return kinds;
  }

  // Topical background token for a document about topics a and b.
  std::string background(std::size_t a, std::size_t b) {
    if (unit() < 0.7) return pick_from(topics_[unit() < 0.5 ? a : b]);
    return pick_from(filler_);
  }

  // Fills a segment of `len` slots, placing `anchors` at distinct random
  // positions and background tokens elsewhere.
  template <typename Background>
  void emit(std::vector<std::string>& out, std::size_t len, const std::vector<std::string>& anchors,
            Background&& fill) {
    std::vector<std::string> seg(len);
    std::vector<std::size_t> slots(len);
    for (std::size_t k = 0; k < len; ++k) slots[k] = k;
    shuffle(slots, rng_);
    std::vector<bool> used(len, false);
    for (std::size_t k = 0; k < anchors.size() && k < len; ++k) {
      seg[slots[k]] = anchors[k];
      used[slots[k]] = true;
    }
    for (std::size_t k = 0; k < len; ++k) {
      if (!used[k]) seg[k] = fill();
    }
    out.insert(out.end(), seg.begin(), seg.end());
  }

  std::string document(DocKind kind) {
    const std::size_t length = config_.min_tokens + pick(config_.max_tokens - config_.min_tokens + 1);
    const std::size_t topic_a = pick(topics_.size());
    std::size_t topic_b = pick(topics_.size());
    if (topic_b == topic_a) topic_b = (topic_a + 1) % topics_.size();
    const double weat_rate = kind == DocKind::mentions ? 0.1 + 0.2 * unit()
                             : kind == DocKind::plain  ? 0.0
                                                       : 0.1 + 0.3 * unit();
    const double grid_rate = 0.2;
    const auto bg = [&] { return background(topic_a, topic_b); };

    std::vector<std::string> tokens;
    while (tokens.size() < length) {
      const double roll = unit();
      const std::size_t len = 8 + pick(6);
      if (roll < weat_rate && kind == DocKind::mentions) {
        emit(tokens, len, {pick_from(weat_words_)}, bg);
      } else if (roll < weat_rate) {
        const bool science = unit() < 0.5;
        const auto& targets = science ? spec_.S : spec_.T;
        const bool stereotyped = kind == DocKind::stereotyped;
        const auto& attributes = (science == stereotyped) ? spec_.A : spec_.B;
        const auto t1 = pick(targets.size());
        const auto t2 = (t1 + 1 + pick(targets.size() - 1)) % targets.size();
        const auto a1 = pick(attributes.size());
        const auto a2 = (a1 + 1 + pick(attributes.size() - 1)) % attributes.size();
        emit(tokens, len + 2, {targets[t1], targets[t2], attributes[a1], attributes[a2]}, bg);
      } else if (roll < weat_rate + grid_rate) {
        const auto r = pick(config_.grid_rows);
        const auto c = pick(config_.grid_cols);
        const std::string word = cell(r, c);
        emit(tokens, len, {word, word}, [&] {
          const double x = unit();
          if (x < 0.4) return pick_from(row_context_[r]);
          if (x < 0.8) return pick_from(col_context_[c]);
          return pick_from(filler_);
        });
      } else {
        emit(tokens, len, {}, bg);
      }
    }
    std::string text;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (k) text.push_back(' ');
      text += tokens[k];
    }
    return text;
  }

  SyntheticCorpusConfig config_;
  std::mt19937_64 rng_;
  WeatSpec spec_;
  std::vector<std::vector<std::string>> topics_;
  std::vector<std::string> filler_;
  std::vector<std::vector<std::string>> row_context_;
  std::vector<std::vector<std::string>> col_context_;
  std::vector<std::string> weat_words_;
};

}  // namespace

WeatSpec weat1_spec() {
  return {"weat1",
          {"science", "technology", "physics", "chemistry", "einstein", "nasa", "experiment",
           "astronomy"},
          {"poetry", "art", "shakespeare", "dance", "literature", "novel", "symphony", "drama"},
          {"male", "man", "boy", "brother", "he", "him", "his", "son"},
          {"female", "woman", "girl", "sister", "she", "her", "hers", "daughter"}};
}

WeatSpec weat2_spec() {
  return {"weat2",
          {"bagpipe", "cello", "guitar", "lute", "trombone", "banjo", "clarinet", "harmonica",
           "mandolin", "trumpet", "bassoon", "drum", "harp", "oboe", "tuba", "bell", "fiddle",
           "harpsichord", "piano", "viola", "bongo", "flute", "horn", "saxophone", "violin"},
          {"arrow", "club", "gun", "missile", "spear", "axe", "dagger", "harpoon", "pistol",
           "sword", "blade", "dynamite", "hatchet", "rifle", "tank", "bomb", "firearm", "knife",
           "shotgun", "teargas", "cannon", "grenade", "mace", "slingshot", "whip"},
          {"caress", "freedom", "health", "love", "peace", "cheer", "friend", "heaven", "loyal",
           "pleasure", "diamond", "gentle", "honest", "lucky", "rainbow", "diploma", "gift",
           "honor", "miracle", "sunrise", "family", "happy", "laughter", "paradise", "vacation"},
          {"abuse", "crash", "filth", "murder", "sickness", "accident", "death", "grief",
           "poison", "stink", "assault", "disaster", "hatred", "pollute", "tragedy", "divorce",
           "jail", "poverty", "ugly", "cancer", "kill", "rotten", "vomit", "agony", "prison"}};
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& config) {
  if (config.min_tokens > config.max_tokens) throw InputError("min_tokens exceeds max_tokens");
  if (config.topics < 2 || config.grid_rows < 2 || config.grid_cols < 2) {
    throw InputError("synthetic corpus needs at least two topics, rows and columns");
  }
  return Generator(config).run();
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream docs(dir / "corpus.txt", std::ios::binary);
  if (!docs) throw InputError("cannot write " + (dir / "corpus.txt").string());
  for (const auto& d : corpus.documents) docs << d << '\n';
  std::ofstream questions(dir / "analogies.txt", std::ios::binary);
  questions << ": grid\n";
  for (const auto& q : corpus.analogies) {
    questions << q.a << ' ' << q.b << ' ' << q.c << ' ' << q.expected << '\n';
  }
}

}  // namespace scglove
