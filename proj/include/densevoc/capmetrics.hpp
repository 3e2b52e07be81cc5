// Caption similarity: tokenization, exact+stem METEOR, corpus-IDF CIDEr and a
// slot for externally computed per-pair scores.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "densevoc/core.hpp"

namespace densevoc {

// ---------------------------------------------------------------------------
// Tokenization

/// Lowercases ASCII letters, turns ASCII punctuation into spaces and splits on
/// whitespace. Idempotent on its own output.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 128 && (std::isspace(u) || std::ispunct(u))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline Caption make_caption(std::string_view raw) { return Caption{tokenize(raw), std::string(raw)}; }

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

namespace detail {
inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}
inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }
}  // namespace detail

/// Light suffix-stripping stemmer. First matching rule wins; a stem keeps at
/// least three characters:
///   sses -> ss, ies -> y, ing -> (undouble), ed -> (undouble), ly -> "",
///   s -> "" unless the word ends in ss, us or is.
/// "Undouble" drops the last letter of a doubled consonant other than l, s, z.
inline std::string stem(std::string_view word) {
  using detail::ends_with;
  std::string w(word);
  const auto strip = [&](std::size_t n) { return w.size() >= n + 3; };
  const auto undouble = [](std::string& s) {
    const std::size_t n = s.size();
    if (n >= 2 && s[n - 1] == s[n - 2] && !detail::is_vowel(s[n - 1]) && s[n - 1] != 'l' && s[n - 1] != 's' &&
        s[n - 1] != 'z')
      s.pop_back();
  };
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies") && strip(2)) {
    w.resize(w.size() - 3);
    w.push_back('y');
  } else if (ends_with(w, "ing") && strip(3)) {
    w.resize(w.size() - 3);
    undouble(w);
  } else if (ends_with(w, "ed") && strip(2)) {
    w.resize(w.size() - 2);
    undouble(w);
  } else if (ends_with(w, "ly") && strip(2)) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is") && strip(1)) {
    w.pop_back();
  }
  return w;
}

// ---------------------------------------------------------------------------
// METEOR (exact and stem stages, no synonymy)

struct MeteorAlignment {
  int exact = 0;
  int stem = 0;
  int chunks = 0;
  int matches() const { return exact + stem; }
};

namespace detail {

class MeteorSearch {
 public:
  MeteorSearch(const std::vector<std::string>& pred, const std::vector<std::string>& ref) : pred_(pred), ref_(ref) {
    std::map<std::string, int> class_ids;
    const auto class_of = [&](const std::string& s) {
      return class_ids.try_emplace(stem(s), static_cast<int>(class_ids.size())).first->second;
    };
    for (const auto& t : pred_) pred_class_.push_back(class_of(t));
    for (const auto& t : ref_) ref_class_.push_back(class_of(t));

    std::map<std::string, int> tok_ids;
    const auto tok_of = [&](const std::string& s) {
      return tok_ids.try_emplace(s, static_cast<int>(tok_ids.size())).first->second;
    };
    for (const auto& t : pred_) pred_tok_.push_back(tok_of(t));
    for (const auto& t : ref_) ref_tok_.push_back(tok_of(t));

    // Slack = occurrences in pred that may go without an exact (resp. any) match
    // while still reaching the maximum exact (resp. total) match count.
    std::vector<int> cp(class_ids.size(), 0), cr(class_ids.size(), 0);
    for (int c : pred_class_) ++cp[static_cast<std::size_t>(c)];
    for (int c : ref_class_) ++cr[static_cast<std::size_t>(c)];
    std::vector<int> tp(tok_ids.size(), 0), tr(tok_ids.size(), 0);
    for (int t : pred_tok_) ++tp[static_cast<std::size_t>(t)];
    for (int t : ref_tok_) ++tr[static_cast<std::size_t>(t)];
    for (std::size_t c = 0; c < cp.size(); ++c) {
      class_skip_slack_.push_back(cp[c] - std::min(cp[c], cr[c]));
      max_total_ += std::min(cp[c], cr[c]);
    }
    for (std::size_t t = 0; t < tp.size(); ++t) {
      tok_inexact_slack_.push_back(tp[t] - std::min(tp[t], tr[t]));
      max_exact_ += std::min(tp[t], tr[t]);
    }
    ref_used_.assign(ref_.size(), 0);
  }

  MeteorAlignment run() {
    best_chunks_ = static_cast<int>(pred_.size()) + 1;
    dfs(0, -2, 0);
    return {max_exact_, max_total_ - max_exact_, max_total_ == 0 ? 0 : std::min(best_chunks_, max_total_)};
  }

 private:
  static constexpr long kNodeBudget = 2'000'000;

  // prev_ref: ref position aligned to pred i-1, or -2 when i-1 was unaligned.
  void dfs(std::size_t i, int prev_ref, int chunks) {
    if (chunks >= best_chunks_ || ++nodes_ > kNodeBudget) return;
    if (i == pred_.size()) {
      best_chunks_ = chunks;
      return;
    }
    const auto c = static_cast<std::size_t>(pred_class_[i]);
    const auto tok = static_cast<std::size_t>(pred_tok_[i]);

    // Candidate ref positions in the same stem class; the chunk-continuing one
    // first, then ascending.
    std::vector<int> order;
    if (prev_ref >= 0 && prev_ref + 1 < static_cast<int>(ref_.size())) order.push_back(prev_ref + 1);
    for (int j = 0; j < static_cast<int>(ref_.size()); ++j)
      if (j != prev_ref + 1 || prev_ref < 0) order.push_back(j);

    for (int j : order) {
      const auto uj = static_cast<std::size_t>(j);
      if (ref_used_[uj] || static_cast<std::size_t>(ref_class_[uj]) != c) continue;
      const bool is_exact = ref_tok_[uj] == pred_tok_[i];
      if (!is_exact && tok_inexact_slack_[tok] == 0) continue;
      if (!is_exact) --tok_inexact_slack_[tok];
      ref_used_[uj] = 1;
      dfs(i + 1, j, chunks + (prev_ref >= 0 && j == prev_ref + 1 ? 0 : 1));
      ref_used_[uj] = 0;
      if (!is_exact) ++tok_inexact_slack_[tok];
    }
    if (class_skip_slack_[c] > 0 && tok_inexact_slack_[tok] > 0) {
      --class_skip_slack_[c];
      --tok_inexact_slack_[tok];
      dfs(i + 1, -2, chunks);
      ++tok_inexact_slack_[tok];
      ++class_skip_slack_[c];
    }
  }

  const std::vector<std::string>& pred_;
  const std::vector<std::string>& ref_;
  std::vector<int> pred_class_, ref_class_, pred_tok_, ref_tok_;
  std::vector<int> class_skip_slack_, tok_inexact_slack_;
  std::vector<char> ref_used_;
  int max_exact_ = 0;
  int max_total_ = 0;
  int best_chunks_ = 0;
  long nodes_ = 0;
};

}  // namespace detail

/// Unigram alignment with the most exact matches, then the most stem matches,
/// then the fewest chunks.
inline MeteorAlignment meteor_align(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  return detail::MeteorSearch(pred, ref).run();
}

/// METEOR with exact and stem matching: F_mean = 10PR/(R+9P) discounted by a
/// fragmentation penalty 0.5 (chunks/matches)^3. Empty captions score 0.
inline double meteor_lite(const Caption& pred, const Caption& ref) {
  if (pred.tokens.empty() || ref.tokens.empty()) return 0.0;
  const MeteorAlignment al = meteor_align(pred.tokens, ref.tokens);
  const int m = al.matches();
  if (m == 0) return 0.0;
  const double precision = static_cast<double>(m) / static_cast<double>(pred.tokens.size());
  const double recall = static_cast<double>(m) / static_cast<double>(ref.tokens.size());
  const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double frag = static_cast<double>(al.chunks) / static_cast<double>(m);
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

// ---------------------------------------------------------------------------
// CIDEr

inline constexpr int kCiderMaxN = 4;
inline constexpr double kCiderSigma = 6.0;

using NgramCounts = std::unordered_map<std::string, int>;

/// Counts of all n-grams of exactly length n.
inline NgramCounts ngram_counts(const std::vector<std::string>& tokens, int n) {
  NgramCounts out;
  const auto len = static_cast<std::size_t>(n);
  if (tokens.size() < len) return out;
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < len; ++k) {
      key.push_back(' ');
      key += tokens[i + k];
    }
    ++out[key];
  }
  return out;
}

/// Document frequencies of 1..4-grams over a caption corpus.
class IdfTable {
 public:
  IdfTable() = default;
  explicit IdfTable(const std::vector<Caption>& docs) {
    for (const auto& d : docs) add_document(d);
  }

  void add_document(const Caption& doc) {
    ++num_docs_;
    for (int n = 1; n <= kCiderMaxN; ++n)
      for (const auto& [gram, cnt] : ngram_counts(doc.tokens, n)) ++doc_count_[gram];
  }

  std::size_t num_docs() const { return num_docs_; }

  int doc_count(const std::string& gram) const {
    auto it = doc_count_.find(gram);
    return it == doc_count_.end() ? 0 : it->second;
  }

  /// log(N / max(1, df)); unseen n-grams get log N.
  double idf(const std::string& gram) const {
    if (num_docs_ == 0) return 0.0;
    return std::log(static_cast<double>(num_docs_) / std::max(1, doc_count(gram)));
  }

 private:
  std::size_t num_docs_ = 0;
  std::unordered_map<std::string, int> doc_count_;
};

/// Per-pair CIDEr-D style similarity in [0,1]: mean over n = 1..4 of the
/// cosine between idf-weighted n-gram count vectors, times the Gaussian length
/// penalty exp(-(len_pred - len_ref)^2 / (2 sigma^2)). No x10 scaling and no
/// count clipping, so the score is symmetric in its arguments.
inline double cider_pair(const Caption& pred, const Caption& ref, const IdfTable& idf) {
  double total = 0.0;
  for (int n = 1; n <= kCiderMaxN; ++n) {
    const NgramCounts cp = ngram_counts(pred.tokens, n);
    const NgramCounts cr = ngram_counts(ref.tokens, n);
    double dot = 0.0, norm_p = 0.0, norm_r = 0.0;
    for (const auto& [gram, cnt] : cp) {
      const double w = idf.idf(gram);
      const double vp = cnt * w;
      norm_p += vp * vp;
      if (auto it = cr.find(gram); it != cr.end()) dot += vp * (it->second * w);
    }
    for (const auto& [gram, cnt] : cr) {
      const double vr = cnt * idf.idf(gram);
      norm_r += vr * vr;
    }
    if (norm_p > 0.0 && norm_r > 0.0) total += std::min(1.0, dot / (std::sqrt(norm_p) * std::sqrt(norm_r)));
  }
  const double delta = static_cast<double>(pred.tokens.size()) - static_cast<double>(ref.tokens.size());
  return total / kCiderMaxN * std::exp(-delta * delta / (2.0 * kCiderSigma * kCiderSigma));
}

// ---------------------------------------------------------------------------
// External scores and per-pair bundling

/// Identifies one (prediction observation, ground-truth trajectory) pair.
struct PairKey {
  std::string video_id;
  std::size_t pred_observation = 0;
  int gt_track_id = 0;

  auto operator<=>(const PairKey&) const = default;
  std::string describe() const {
    return "(video '" + video_id + "', pred observation " + std::to_string(pred_observation) + ", gt track " +
           std::to_string(gt_track_id) + ")";
  }
};

class ExternalScoreError : public std::runtime_error {
 public:
  ExternalScoreError(const PairKey& key, const std::string& what)
      : std::runtime_error("external scorer failed for pair " + key.describe() + ": " + what), key_(key) {}
  const PairKey& key() const { return key_; }

 private:
  PairKey key_;
};

/// Source of externally computed caption similarities (SPICE, full METEOR...).
class ExternalScorer {
 public:
  virtual ~ExternalScorer() = default;
  virtual double score(const PairKey& key) const = 0;
};

/// Scores loaded from a sidecar file.
class TableExternalScorer : public ExternalScorer {
 public:
  void set(const PairKey& key, double value) { table_[key] = value; }
  std::size_t size() const { return table_.size(); }

  double score(const PairKey& key) const override {
    auto it = table_.find(key);
    if (it == table_.end()) throw ExternalScoreError(key, "no score recorded");
    if (!(it->second >= 0.0 && it->second <= 1.0)) throw ExternalScoreError(key, "score outside [0,1]");
    return it->second;
  }

 private:
  std::map<PairKey, double> table_;
};

/// Which caption sub-metrics contribute to the per-pair score.
struct CaptionMetricConfig {
  bool meteor = true;
  bool cider = true;
  bool exact = false;  // 1 when token sequences are identical, else 0
  const ExternalScorer* external = nullptr;

  int divisor() const { return int(meteor) + int(cider) + int(exact) + int(external != nullptr); }
  std::vector<std::string> enabled() const {
    std::vector<std::string> out;
    if (meteor) out.emplace_back("meteor");
    if (cider) out.emplace_back("cider");
    if (exact) out.emplace_back("exact");
    if (external) out.emplace_back("external");
    return out;
  }
};

struct CaptionScore {
  std::optional<double> meteor;
  std::optional<double> cider;
  std::optional<double> exact;
  std::optional<double> external;

  /// Mean of the enabled sub-metrics.
  double combined() const {
    double sum = 0.0;
    int n = 0;
    for (const auto& v : {meteor, cider, exact, external})
      if (v) {
        sum += *v;
        ++n;
      }
    return n ? sum / n : 0.0;
  }
};

inline CaptionScore score_pair(const Caption& pred, const Caption& ref, const IdfTable& idf,
                               const CaptionMetricConfig& cfg, const PairKey* key = nullptr) {
  CaptionScore s;
  if (cfg.meteor) s.meteor = meteor_lite(pred, ref);
  if (cfg.cider) s.cider = cider_pair(pred, ref, idf);
  if (cfg.exact) s.exact = (!pred.tokens.empty() && pred.tokens == ref.tokens) ? 1.0 : 0.0;
  if (cfg.external) {
    if (!key) throw ExternalScoreError(PairKey{}, "pair key required for external scoring");
    s.external = cfg.external->score(*key);
  }
  return s;
}

}  // namespace densevoc
