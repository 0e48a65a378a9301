#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>

namespace spam {

enum class Gender { male, female };
enum class Level { low, normal, high };
enum class Speed { slow, normal, fast };

/// Attribute tuple that defines positive pairs: records with equal keys are
/// interchangeable for contrastive training.
struct StyleKey {
  Gender gender = Gender::male;
  Level pitch = Level::normal;
  Speed speed = Speed::normal;
  Level energy = Level::normal;

  friend bool operator==(const StyleKey&, const StyleKey&) = default;
  friend auto operator<=>(const StyleKey&, const StyleKey&) = default;
};

inline bool style_key_equal(const StyleKey& a, const StyleKey& b) { return a == b; }

inline constexpr std::size_t kNumStyleKeys = 2 * 3 * 3 * 3;

/// Dense index in [0, 54); inverse of style_key_from_index.
std::size_t style_key_index(const StyleKey& key);
StyleKey style_key_from_index(std::size_t index);
std::array<StyleKey, kNumStyleKeys> all_style_keys();

enum class Attribute { gender, pitch, speed, energy };
inline constexpr std::array<Attribute, 4> kAttributes{Attribute::gender, Attribute::pitch,
                                                      Attribute::speed, Attribute::energy};

/// Level of one attribute as an integer (gender 0..1, others 0..2).
int attribute_level(const StyleKey& key, Attribute attr);
int attribute_cardinality(Attribute attr);
StyleKey with_attribute(StyleKey key, Attribute attr, int level);
/// Number of attributes on which the keys differ (0..4).
int attribute_distance(const StyleKey& a, const StyleKey& b);

std::string_view to_string(Gender g);
std::string_view to_string(Level l);
std::string_view to_string(Speed s);
std::string_view to_string(Attribute a);
Gender parse_gender(std::string_view s);
Level parse_level(std::string_view s);
Speed parse_speed(std::string_view s);

/// "male/high/normal/normal" style rendering for logs and error messages.
std::string describe(const StyleKey& key);

}  // namespace spam
