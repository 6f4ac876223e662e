// Reference values from tests/oracles/golden.py (mpmath, 40 digits),
// rounded to 17 significant digits.
#ifndef SHARPDECAY_TESTS_GOLDEN_HPP
#define SHARPDECAY_TESTS_GOLDEN_HPP

namespace golden {

inline constexpr double kStadiumConstant2 = 2.0151350835495316;
inline constexpr double kStadiumConstant1 = 0.62542387724857226;
inline constexpr double kRate15Conv12At4 = 0.92838823279853311;
inline constexpr double kMeanFreePathStadium = 2.1818117971465539;
inline constexpr double kMeanFreePathSquareDisk = 0.52254101727842957;
// Branch endpoints x_1..x_5 and x_40 for gamma = 1/2.
inline constexpr double kBranchX[5] = {0.28492014549902663, 0.1783772889725727, 0.11976335052175679, 0.0848250794275213,
                                       0.062648951831525216};
inline constexpr double kBranchX40 = 0.0013907236501173121;

// Philox4x32-10 known answers from the Random123 distribution (kat_vectors).
inline constexpr unsigned kPhiloxCtr[3][4] = {
    {0x00000000u, 0x00000000u, 0x00000000u, 0x00000000u},
    {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
    {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}};
inline constexpr unsigned kPhiloxKey[3][2] = {{0x00000000u, 0x00000000u}, {0xffffffffu, 0xffffffffu}, {0xa4093822u, 0x299f31d0u}};
inline constexpr unsigned kPhiloxOut[3][4] = {
    {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u},
    {0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu},
    {0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}};

}  // namespace golden

#endif  // SHARPDECAY_TESTS_GOLDEN_HPP
