#pragma once

#include <array>
#include <string>
#include <string_view>

#include "gumbel/errors.hpp"

namespace gumbel {

// Ordered residue alphabet. Letters must be distinct printable characters;
// order fixes matrix row/column indexing throughout.
class Alphabet {
  public:
    explicit Alphabet(std::string_view letters) : letters_(letters) {
        if (letters_.empty() || letters_.size() > 32)
            throw config_error("alphabet must have between 1 and 32 letters");
        index_.fill(-1);
        for (std::size_t i = 0; i < letters_.size(); ++i) {
            unsigned char c = static_cast<unsigned char>(letters_[i]);
            if (c <= ' ' || c == '#' || c == '*')
                throw config_error(std::string("alphabet letter '") + letters_[i] +
                                   "' is reserved or non-printable");
            if (index_[c] != -1)
                throw config_error(std::string("duplicate alphabet letter '") +
                                   letters_[i] + "'");
            index_[c] = static_cast<int>(i);
        }
    }

    int size() const { return static_cast<int>(letters_.size()); }

    char letter(int i) const { return letters_[static_cast<std::size_t>(i)]; }

    const std::string& letters() const { return letters_; }

    bool contains(char c) const { return index_[static_cast<unsigned char>(c)] >= 0; }

    // Index of a letter; throws config_error for letters outside the alphabet.
    int index_of(char c) const {
        int i = index_[static_cast<unsigned char>(c)];
        if (i < 0)
            throw config_error(std::string("letter '") + c + "' is not in alphabet \"" +
                               letters_ + "\"");
        return i;
    }

    bool operator==(const Alphabet& other) const { return letters_ == other.letters_; }

  private:
    std::string letters_;
    std::array<int, 256> index_;
};

}  // namespace gumbel
