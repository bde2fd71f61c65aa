// Copyright 2026 The lmdecide Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMDECIDE_ENV_TICTACTOE_HPP_
#define LMDECIDE_ENV_TICTACTOE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmdecide/common.hpp"

namespace lmdecide {

enum class Player : std::uint8_t { kAgent = 1, kOpponent = 2 };

inline Player Other(Player p) {
  return p == Player::kAgent ? Player::kOpponent : Player::kAgent;
}

enum class GameResult { kWin, kDraw, kLoss };

struct GameOutcome {
  GameResult result = GameResult::kDraw;
  // +1 / 0 / -1 matching result.
  double reward = 0.0;
};

// 3x3 board; cells hold 0 (empty), 1 (agent) or 2 (opponent).
struct Board {
  std::array<std::uint8_t, 9> cells{};
  Player to_move = Player::kAgent;

  // Parses the 9-digit string form, e.g. "102010002". The mover is inferred
  // from the stone counts assuming the agent moved first.
  static Board FromString(std::string_view digits);
  std::string ToString() const;

  int MoveCount() const;
  // 0 if no line of three, else the owning player value (1 or 2).
  int Winner() const;
  bool IsFull() const;
  bool IsTerminal() const;

  bool operator==(const Board&) const = default;
};

// Empty-cell indices in ascending order; empty for terminal boards.
std::vector<int> LegalActions(const Board& board);

// Outcome from the agent's perspective, if the board is terminal.
std::optional<GameOutcome> TerminalOutcome(const Board& board);

// Fills `action` for the player to move. Throws IllegalActionError for
// occupied or out-of-range cells and for moves on terminal boards.
std::pair<Board, std::optional<GameOutcome>> ApplyMove(const Board& board,
                                                       int action);

// Three lines of three digits; optionally followed by a legal-actions line.
std::string RenderBoard(const Board& board, bool include_legal);
std::string RenderLegalActions(const Board& board);

}  // namespace lmdecide

#endif  // LMDECIDE_ENV_TICTACTOE_HPP_
