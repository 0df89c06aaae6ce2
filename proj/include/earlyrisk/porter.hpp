#pragma once

// Porter's suffix-stripping stemmer, transcribed from the author's reference
// C implementation, including its two departures from the published
// algorithm ((m>0) bli -> ble and (m>0) logi -> log) so stems match the
// behaviour of the widely deployed version rather than the 1980 text.
// Words of length <= 2 and tokens containing anything outside [a-z]
// (pipeline sentinels such as <url> and <num>) pass through unchanged.

#include <cstring>
#include <string>
#include <string_view>
#include <vector>

namespace earlyrisk::textpipe {

namespace detail {

class PorterStemmer {
 public:
  std::string stem(std::string_view word) {
    b_.assign(word.begin(), word.end());
    k_ = static_cast<int>(b_.size()) - 1;
    j_ = 0;
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return std::string(b_.data(), static_cast<std::size_t>(k_ + 1));
  }

 private:
  std::vector<char> b_;  // working buffer; the word is b_[0..k_]
  int k_ = 0;            // index of the last letter
  int j_ = 0;            // end of the stem once a suffix has been matched

  bool cons(int i) const {
    switch (b_[static_cast<std::size_t>(i)]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in b_[0..j_]: the "measure" of the stem.
  int m() const {
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

  bool double_cons(int i) const {
    if (i < 1) return false;
    if (b_[static_cast<std::size_t>(i)] != b_[static_cast<std::size_t>(i - 1)])
      return false;
    return cons(i);
  }

  // consonant-vowel-consonant ending at i, where the final consonant is not
  // w, x or y; restores a final e after stripping (e.g. hop(e), hopping).
  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[static_cast<std::size_t>(i)];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view s) {
    const int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (std::memcmp(b_.data() + (k_ - len + 1), s.data(), s.size()) != 0) {
      return false;
    }
    j_ = k_ - len;
    return true;
  }

  // Replace the matched suffix b_[j_+1..k_] with s.
  void set_to(std::string_view s) {
    b_.resize(static_cast<std::size_t>(j_ + 1));
    b_.insert(b_.end(), s.begin(), s.end());
    k_ = j_ + static_cast<int>(s.size());
  }

  void replace(std::string_view s) {
    if (m() > 0) set_to(s);
  }

  // Plurals and -ed / -ing.
  void step1ab() {
    if (b_[static_cast<std::size_t>(k_)] == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (b_[static_cast<std::size_t>(k_ - 1)] != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_cons(k_)) {
        --k_;
        const char ch = b_[static_cast<std::size_t>(k_)];
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (m() == 1 && cvc(k_)) {
        set_to("e");
      }
    }
  }

  // Turn terminal y into i when there is another vowel in the stem.
  void step1c() {
    if (ends("y") && vowel_in_stem()) {
      b_[static_cast<std::size_t>(k_)] = 'i';
    }
  }

  // Map double suffixes to single ones, e.g. -ization -> -ize.
  void step2() {
    if (k_ < 1) return;
    switch (b_[static_cast<std::size_t>(k_ - 1)]) {
      case 'a':
        if (ends("ational")) { replace("ate"); break; }
        if (ends("tional")) { replace("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { replace("ence"); break; }
        if (ends("anci")) { replace("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { replace("ize"); break; }
        break;
      case 'l':
        if (ends("bli")) { replace("ble"); break; }  // departure: was abli->able
        if (ends("alli")) { replace("al"); break; }
        if (ends("entli")) { replace("ent"); break; }
        if (ends("eli")) { replace("e"); break; }
        if (ends("ousli")) { replace("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { replace("ize"); break; }
        if (ends("ation")) { replace("ate"); break; }
        if (ends("ator")) { replace("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { replace("al"); break; }
        if (ends("iveness")) { replace("ive"); break; }
        if (ends("fulness")) { replace("ful"); break; }
        if (ends("ousness")) { replace("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { replace("al"); break; }
        if (ends("iviti")) { replace("ive"); break; }
        if (ends("biliti")) { replace("ble"); break; }
        break;
      case 'g':
        if (ends("logi")) { replace("log"); break; }  // departure
        break;
      default:
        break;
    }
  }

  // -ic-, -full, -ness and similar.
  void step3() {
    switch (b_[static_cast<std::size_t>(k_)]) {
      case 'e':
        if (ends("icate")) { replace("ic"); break; }
        if (ends("ative")) { replace(""); break; }
        if (ends("alize")) { replace("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { replace("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { replace("ic"); break; }
        if (ends("ful")) { replace(""); break; }
        break;
      case 's':
        if (ends("ness")) { replace(""); break; }
        break;
      default:
        break;
    }
  }

  // Drop -ant, -ence and friends when the measure is large enough.
  void step4() {
    if (k_ < 1) return;
    switch (b_[static_cast<std::size_t>(k_ - 1)]) {
      case 'a':
        if (ends("al")) break;
        return;
      case 'c':
        if (ends("ance")) break;
        if (ends("ence")) break;
        return;
      case 'e':
        if (ends("er")) break;
        return;
      case 'i':
        if (ends("ic")) break;
        return;
      case 'l':
        if (ends("able")) break;
        if (ends("ible")) break;
        return;
      case 'n':
        if (ends("ant")) break;
        if (ends("ement")) break;
        if (ends("ment")) break;
        if (ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 &&
            (b_[static_cast<std::size_t>(j_)] == 's' ||
             b_[static_cast<std::size_t>(j_)] == 't')) {
          break;
        }
        if (ends("ou")) break;  // takes off -ous
        return;
      case 's':
        if (ends("ism")) break;
        return;
      case 't':
        if (ends("ate")) break;
        if (ends("iti")) break;
        return;
      case 'u':
        if (ends("ous")) break;
        return;
      case 'v':
        if (ends("ive")) break;
        return;
      case 'z':
        if (ends("ize")) break;
        return;
      default:
        return;
    }
    if (m() > 1) k_ = j_;
  }

  // Remove a final -e and reduce -ll if the measure allows.
  void step5() {
    j_ = k_;
    if (b_[static_cast<std::size_t>(k_)] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[static_cast<std::size_t>(k_)] == 'l' && double_cons(k_) && m() > 1) {
      --k_;
    }
  }
};

}  // namespace detail

inline std::string porter_stem(std::string_view token) {
  if (token.size() <= 2) return std::string(token);
  for (char ch : token) {
    if (ch < 'a' || ch > 'z') return std::string(token);
  }
  detail::PorterStemmer stemmer;
  return stemmer.stem(token);
}

}  // namespace earlyrisk::textpipe
