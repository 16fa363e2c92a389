#pragma once

// Porter (1980) suffix-stripping stemmer, following Martin Porter's reference
// C implementation, including its two departures from the published rules
// (step 2 maps "bli" -> "ble" and "logi" -> "log").

#include <string>
#include <string_view>

namespace webrank {

namespace detail {

class PorterStemmer {
 public:
  explicit PorterStemmer(std::string_view word) : b_(word) {}

  std::string run() && {
    if (b_.size() <= 2) return std::move(b_);
    k_ = static_cast<int>(b_.size()) - 1;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    b_.resize(static_cast<std::size_t>(k_) + 1);
    return std::move(b_);
  }

 private:
  // True when b[i] is a consonant. 'y' is a consonant at the start of a word
  // or after a vowel.
  bool cons(int i) const {
    switch (b_[static_cast<std::size_t>(i)]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
    }
  }

  // Number of VC sequences in b[0..j].
  int measure() const {
    int n = 0;
    int i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_consonant(int j) const {
    if (j < 1) return false;
    if (b_[static_cast<std::size_t>(j)] != b_[static_cast<std::size_t>(j - 1)]) return false;
    return cons(j);
  }

  // consonant-vowel-consonant ending at i, where the last consonant is not w, x or y.
  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[static_cast<std::size_t>(i)];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view s) {
    const int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (std::string_view(b_).substr(static_cast<std::size_t>(k_ - len + 1), s.size()) != s) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(std::string_view s) {
    b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
    k_ = j_ + static_cast<int>(s.size());
    b_.resize(static_cast<std::size_t>(k_) + 1);
  }

  void replace_if_measured(std::string_view s) {
    if (measure() > 0) set_to(s);
  }

  char at(int i) const { return b_[static_cast<std::size_t>(i)]; }

  // Plurals and -ed / -ing.
  void step1ab() {
    if (at(k_) == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (at(k_ - 1) != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (measure() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_consonant(k_)) {
        --k_;
        const char ch = at(k_);
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (measure() == 1 && cvc(k_)) {
        set_to("e");
      }
    }
  }

  // Terminal y -> i when there is another vowel in the stem.
  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
  }

  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
  };

  // Tries rules in order; the first suffix that matches ends the step, whether
  // or not the measure condition allows the replacement.
  template <std::size_t N>
  void apply_first(const Rule (&rules)[N]) {
    for (const auto& r : rules) {
      if (ends(r.suffix)) {
        replace_if_measured(r.replacement);
        return;
      }
    }
  }

  // Double suffixes to single ones.
  void step2() {
    if (k_ < 1) return;
    switch (at(k_ - 1)) {
      case 'a': { static constexpr Rule r[] = {{"ational", "ate"}, {"tional", "tion"}}; apply_first(r); break; }
      case 'c': { static constexpr Rule r[] = {{"enci", "ence"}, {"anci", "ance"}}; apply_first(r); break; }
      case 'e': { static constexpr Rule r[] = {{"izer", "ize"}}; apply_first(r); break; }
      case 'l': {
        static constexpr Rule r[] = {{"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
        apply_first(r);
        break;
      }
      case 'o': { static constexpr Rule r[] = {{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}}; apply_first(r); break; }
      case 's': {
        static constexpr Rule r[] = {{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
        apply_first(r);
        break;
      }
      case 't': { static constexpr Rule r[] = {{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}}; apply_first(r); break; }
      case 'g': { static constexpr Rule r[] = {{"logi", "log"}}; apply_first(r); break; }
      default: break;
    }
  }

  // -ic-, -full, -ness etc.
  void step3() {
    switch (at(k_)) {
      case 'e': { static constexpr Rule r[] = {{"icate", "ic"}, {"ative", ""}, {"alize", "al"}}; apply_first(r); break; }
      case 'i': { static constexpr Rule r[] = {{"iciti", "ic"}}; apply_first(r); break; }
      case 'l': { static constexpr Rule r[] = {{"ical", "ic"}, {"ful", ""}}; apply_first(r); break; }
      case 's': { static constexpr Rule r[] = {{"ness", ""}}; apply_first(r); break; }
      default: break;
    }
  }

  // Drops -ant, -ence etc. in context <c>vcvc<v>.
  void step4() {
    if (k_ < 1) return;
    bool matched = false;
    switch (at(k_ - 1)) {
      case 'a': matched = ends("al"); break;
      case 'c': matched = ends("ance") || ends("ence"); break;
      case 'e': matched = ends("er"); break;
      case 'i': matched = ends("ic"); break;
      case 'l': matched = ends("able") || ends("ible"); break;
      case 'n': matched = ends("ant") || ends("ement") || ends("ment") || ends("ent"); break;
      case 'o':
        matched = (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) || ends("ou");
        break;
      case 's': matched = ends("ism"); break;
      case 't': matched = ends("ate") || ends("iti"); break;
      case 'u': matched = ends("ous"); break;
      case 'v': matched = ends("ive"); break;
      case 'z': matched = ends("ize"); break;
      default: break;
    }
    if (matched && measure() > 1) k_ = j_;
  }

  // Final -e, and -ll -> -l when m > 1.
  void step5() {
    j_ = k_;
    if (at(k_) == 'e') {
      const int a = measure();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (at(k_) == 'l' && double_consonant(k_) && measure() > 1) --k_;
  }

  std::string b_;
  int k_ = 0;
  int j_ = 0;
};

}  // namespace detail

// Stems one lowercase ASCII word. Words of one or two letters are returned
// unchanged.
inline std::string porter_stem(std::string_view word) {
  return detail::PorterStemmer(word).run();
}

}  // namespace webrank
