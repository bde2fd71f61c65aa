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

#include "lmdecide/env_tictactoe.hpp"

namespace lmdecide {

namespace {

constexpr int kLines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                              {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};

}  // namespace

Board Board::FromString(std::string_view digits) {
  if (digits.size() != 9) throw ConfigError("board string must have 9 digits");
  Board b;
  int ones = 0, twos = 0;
  for (int i = 0; i < 9; ++i) {
    char c = digits[i];
    if (c < '0' || c > '2') throw ConfigError("board digits must be 0, 1 or 2");
    b.cells[i] = static_cast<std::uint8_t>(c - '0');
    ones += c == '1';
    twos += c == '2';
  }
  b.to_move = ones > twos ? Player::kOpponent : Player::kAgent;
  return b;
}

std::string Board::ToString() const {
  std::string s(9, '0');
  for (int i = 0; i < 9; ++i) s[i] = static_cast<char>('0' + cells[i]);
  return s;
}

int Board::MoveCount() const {
  int n = 0;
  for (auto c : cells) n += c != 0;
  return n;
}

int Board::Winner() const {
  for (const auto& line : kLines) {
    auto c = cells[line[0]];
    if (c != 0 && c == cells[line[1]] && c == cells[line[2]]) return c;
  }
  return 0;
}

bool Board::IsFull() const { return MoveCount() == 9; }

bool Board::IsTerminal() const { return Winner() != 0 || IsFull(); }

std::vector<int> LegalActions(const Board& board) {
  std::vector<int> out;
  if (board.IsTerminal()) return out;
  for (int i = 0; i < 9; ++i) {
    if (board.cells[i] == 0) out.push_back(i);
  }
  return out;
}

std::optional<GameOutcome> TerminalOutcome(const Board& board) {
  int w = board.Winner();
  if (w == static_cast<int>(Player::kAgent)) return GameOutcome{GameResult::kWin, 1.0};
  if (w == static_cast<int>(Player::kOpponent)) {
    return GameOutcome{GameResult::kLoss, -1.0};
  }
  if (board.IsFull()) return GameOutcome{GameResult::kDraw, 0.0};
  return std::nullopt;
}

std::pair<Board, std::optional<GameOutcome>> ApplyMove(const Board& board,
                                                       int action) {
  if (board.IsTerminal()) throw IllegalActionError("game is already over");
  if (action < 0 || action > 8) {
    throw IllegalActionError("action " + std::to_string(action) + " is off the board");
  }
  if (board.cells[action] != 0) {
    throw IllegalActionError("cell " + std::to_string(action) + " is occupied");
  }
  Board next = board;
  next.cells[action] = static_cast<std::uint8_t>(board.to_move);
  next.to_move = Other(board.to_move);
  return {next, TerminalOutcome(next)};
}

std::string RenderBoard(const Board& board, bool include_legal) {
  std::string s = board.ToString();
  std::string out = s.substr(0, 3) + "\n" + s.substr(3, 3) + "\n" + s.substr(6, 3);
  if (include_legal) out += "\n" + RenderLegalActions(board);
  return out;
}

std::string RenderLegalActions(const Board& board) {
  std::string out = "Legal actions: ";
  auto legal = LegalActions(board);
  for (std::size_t i = 0; i < legal.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(legal[i]);
  }
  return out;
}

}  // namespace lmdecide
