#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace forensic {

using TechniqueIndex = std::size_t;

inline constexpr std::size_t kMaxTechniques = 256;

// Fixed-capacity bitset over catalog indices. Catalog order is bit order.
class TechniqueSet {
public:
    static constexpr std::size_t kWords = kMaxTechniques / 64;

    constexpr TechniqueSet() = default;

    static TechniqueSet from_indices(const std::vector<TechniqueIndex>& indices)
    {
        TechniqueSet s;
        for (auto i : indices) s.insert(i);
        return s;
    }

    constexpr bool contains(TechniqueIndex i) const
    {
        return (words_[i >> 6] >> (i & 63)) & 1U;
    }
    constexpr void insert(TechniqueIndex i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    constexpr void erase(TechniqueIndex i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    constexpr std::size_t size() const
    {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }
    constexpr bool empty() const
    {
        for (auto w : words_)
            if (w) return false;
        return true;
    }

    // |*this ∩ other|
    constexpr std::size_t intersection_size(const TechniqueSet& other) const
    {
        std::size_t n = 0;
        for (std::size_t k = 0; k < kWords; ++k)
            n += static_cast<std::size_t>(std::popcount(words_[k] & other.words_[k]));
        return n;
    }
    // |*this ∖ other|
    constexpr std::size_t difference_size(const TechniqueSet& other) const
    {
        std::size_t n = 0;
        for (std::size_t k = 0; k < kWords; ++k)
            n += static_cast<std::size_t>(std::popcount(words_[k] & ~other.words_[k]));
        return n;
    }
    constexpr bool intersects(const TechniqueSet& other) const
    {
        for (std::size_t k = 0; k < kWords; ++k)
            if (words_[k] & other.words_[k]) return true;
        return false;
    }
    constexpr bool is_subset_of(const TechniqueSet& other) const
    {
        for (std::size_t k = 0; k < kWords; ++k)
            if (words_[k] & ~other.words_[k]) return false;
        return true;
    }

    constexpr TechniqueSet operator|(const TechniqueSet& o) const
    {
        TechniqueSet r;
        for (std::size_t k = 0; k < kWords; ++k) r.words_[k] = words_[k] | o.words_[k];
        return r;
    }
    constexpr TechniqueSet operator&(const TechniqueSet& o) const
    {
        TechniqueSet r;
        for (std::size_t k = 0; k < kWords; ++k) r.words_[k] = words_[k] & o.words_[k];
        return r;
    }
    constexpr TechniqueSet minus(const TechniqueSet& o) const
    {
        TechniqueSet r;
        for (std::size_t k = 0; k < kWords; ++k) r.words_[k] = words_[k] & ~o.words_[k];
        return r;
    }

    // Visits members in ascending index order.
    template <typename Fn>
    constexpr void for_each(Fn&& fn) const
    {
        for (std::size_t k = 0; k < kWords; ++k) {
            std::uint64_t w = words_[k];
            while (w) {
                const auto bit = static_cast<std::size_t>(std::countr_zero(w));
                fn(k * 64 + bit);
                w &= w - 1;
            }
        }
    }

    std::vector<TechniqueIndex> to_indices() const
    {
        std::vector<TechniqueIndex> out;
        out.reserve(size());
        for_each([&](TechniqueIndex i) { out.push_back(i); });
        return out;
    }

    constexpr const std::array<std::uint64_t, kWords>& words() const { return words_; }

    friend constexpr bool operator==(const TechniqueSet&, const TechniqueSet&) = default;
    friend constexpr auto operator<=>(const TechniqueSet&, const TechniqueSet&) = default;

private:
    std::array<std::uint64_t, kWords> words_{};
};

inline std::size_t hash_words(const TechniqueSet& s, std::size_t seed = 0)
{
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (auto w : s.words()) {
        std::uint64_t z = w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        h ^= z ^ (z >> 31);
    }
    return static_cast<std::size_t>(h);
}

} // namespace forensic

template <>
struct std::hash<forensic::TechniqueSet> {
    std::size_t operator()(const forensic::TechniqueSet& s) const noexcept { return forensic::hash_words(s); }
};
