#pragma once

// Reference program/sequence pair with its per-line value annotations,
// transcribed by hand.

#include <string>
#include <vector>

namespace oracle {

inline const std::string kRefProgram =
    "sequence_1 = range_func_up(149, 171)  # [149, 150, ..., 170, 171]\n"
    "sequence_2 = range_func_up(18, 28)    # [18, 19, ..., 27, 28]\n"
    "sequence_3 = repeat_num(22, 237)      # [237, 237, ..., 237, 237]\n"
    "sequence_4 = range_func_up(142, 155)  # [142, 143, ..., 154, 155]\n"
    "sequence_5 = reverse_list(sequence_2) # [28, 27, ..., 19, 18]\n"
    "sequence_6 = substitute(sequence_1, 165, 174) # [149, 150, ..., 170, 171]\n"
    "sequence_7 = substitute(sequence_2, 28, 177)  # [18, 19, ..., 26, 177]\n"
    "sequence_8 = substitute(sequence_5, 27, 177)  # [28, 177, ..., 19, 18]\n"
    "sequence_9 = concatenate(sequence_2, sequence_3) # [18, 19, ..., 237, 237]\n"
    "sequence_10 = concatenate(sequence_9, sequence_4) # [18, 19, ..., 154, 155]\n"
    "sequence_11 = concatenate(sequence_10, sequence_5) # [18, 19, ..., 19, 18]\n"
    "sequence_12 = concatenate(sequence_11, sequence_6) # [18, 19, ..., 170, 171]\n"
    "sequence_13 = concatenate(sequence_12, sequence_7) # [18, 19, ..., 26, 177]\n"
    "sequence_14 = concatenate(sequence_13, sequence_8) # [18, 19, ..., 19, 18]\n"
    "sequence_15 = interleave(sequence_14, sequence_1)  # [18, 149, ..., 170, 171]\n"
    "sequence_16 = concatenate(sequence_15, sequence_8) # [18, 149, ..., 19, 18]\n"
    "sequence_17 = concatenate(sequence_16, sequence_1) # [18, 149, ..., 170, 171]\n"
    "output = sequence_17 # [18, 149, ..., 170, 171]\n";

// one per assignment line, then the output line
inline const std::vector<std::string> kRefComments = {
    "[149, 150, ..., 170, 171]", "[18, 19, ..., 27, 28]",      "[237, 237, ..., 237, 237]",
    "[142, 143, ..., 154, 155]", "[28, 27, ..., 19, 18]",      "[149, 150, ..., 170, 171]",
    "[18, 19, ..., 26, 177]",    "[28, 177, ..., 19, 18]",     "[18, 19, ..., 237, 237]",
    "[18, 19, ..., 154, 155]",   "[18, 19, ..., 19, 18]",      "[18, 19, ..., 170, 171]",
    "[18, 19, ..., 26, 177]",    "[18, 19, ..., 19, 18]",      "[18, 149, ..., 170, 171]",
    "[18, 149, ..., 19, 18]",    "[18, 149, ..., 170, 171]",   "[18, 149, ..., 170, 171]",
};

// Comments of sequence_7, sequence_13 and sequence_15 disagree with the
// program's own output sequence (zero-based line indices below).
inline const std::vector<std::size_t> kRefInconsistentComments = {6, 12, 14};

inline const std::vector<int> kRefSequence = {
    18,  149, 19,  150, 20,  151, 21,  152, 22,  153, 23,  154, 24,  155, 25,  156, 26,  157, 27,  158,
    28,  159, 237, 160, 237, 161, 237, 162, 237, 163, 237, 164, 237, 165, 237, 166, 237, 167, 237, 168,
    237, 169, 237, 170, 237, 171, 237, 237, 237, 237, 237, 237, 237, 237, 237, 237, 142, 143, 144, 145,
    146, 147, 148, 149, 150, 151, 152, 153, 154, 155, 28,  27,  26,  25,  24,  23,  22,  21,  20,  19,
    18,  149, 150, 151, 152, 153, 154, 155, 156, 157, 158, 159, 160, 161, 162, 163, 164, 174, 166, 167,
    168, 169, 170, 171, 18,  19,  20,  21,  22,  23,  24,  25,  26,  27,  177, 28,  177, 26,  25,  24,
    23,  22,  21,  20,  19,  18,  28,  177, 26,  25,  24,  23,  22,  21,  20,  19,  18,  149, 150, 151,
    152, 153, 154, 155, 156, 157, 158, 159, 160, 161, 162, 163, 164, 165, 166, 167, 168, 169, 170, 171,
};

}  // namespace oracle
