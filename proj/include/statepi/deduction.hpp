#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "statepi/model.hpp"

namespace spi {

/// Messages output to the adversary, in order. Entry i is addressed by the
/// handle x_{i+1} in recipes.
struct Knowledge {
    std::vector<Term> entries;
    std::vector<Term> restricted;

    void add(Term t) { entries.push_back(t); }
    std::size_t size() const { return entries.size(); }
};

/// Handle variable for 0-based entry index i (printed x_{i+1}).
Term handle(std::size_t i);
/// Inverse of handle(); std::nullopt when t is not a handle.
std::optional<std::size_t> handle_index(Term t);

/// Substitutes handles by entries and evaluates. Terms that are not handles
/// (adversary nonces, public constants, adversary variables) stay as they are.
std::optional<Term> apply_recipe(const SymbolicModel& m, const std::vector<Term>& entries, Term recipe);

/// Destructor closure of a knowledge set, each element with a recipe.
class Saturation {
public:
    struct Item {
        Term term;
        Term recipe;
    };

    const std::vector<Item>& items() const { return items_; }
    const Item* find(Term t) const;
    bool contains(Term t) const { return find(t) != nullptr; }

private:
    friend Saturation saturate(const SymbolicModel&, const std::vector<Term>&);
    std::vector<Item> items_;
    std::unordered_map<Term, std::size_t> index_;
};

/// Least fixed point of destructor applications whose principal argument is
/// in the set and whose other arguments are derivable. May throw Undecided
/// when an adversary variable sits at an inspected position.
Saturation saturate(const SymbolicModel& m, const std::vector<Term>& entries);
inline Saturation saturate(const SymbolicModel& m, const Knowledge& k) { return saturate(m, k.entries); }

/// Recipe for t from the saturated set by composition, or std::nullopt.
std::optional<Term> compose(const SymbolicModel& m, const Saturation& sat, Term t);

/// Decides K |- t and returns a recipe witnessing it.
std::optional<Term> derivable(const SymbolicModel& m, const Knowledge& k, Term t);

}  // namespace spi
