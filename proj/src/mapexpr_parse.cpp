#include <charconv>
#include <cmath>
#include <cstring>

#include "stokes/mapexpr.hpp"

namespace stokes {

namespace {

ExprPtr node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

struct Token {
  enum class T {
    Number, Ident, LParen, RParen, Comma, Plus, Minus, Star, Slash, Caret, End
  };
  T t = T::End;
  double num = 0.0;
  std::string text;
  int line = 1, col = 1;
};

struct Lexer {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  [[noreturn]] void err(const std::string& msg, int l, int c) const {
    fail(ErrorCode::SyntaxError, msg + " at line " + std::to_string(l) +
                                     ", column " + std::to_string(c));
  }

  void advance(std::size_t bytes, int cols) {
    pos += bytes;
    col += cols;
  }

  Token next() {
    while (pos < src.size()) {
      const char c = src[pos];
      if (c == '\n') {
        ++pos;
        ++line;
        col = 1;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        advance(1, 1);
      } else {
        break;
      }
    }
    Token tok;
    tok.line = line;
    tok.col = col;
    if (pos >= src.size()) return tok;

    const char c = src[pos];
    auto punct = [&](Token::T t) {
      tok.t = t;
      advance(1, 1);
      return tok;
    };
    switch (c) {
      case '(': return punct(Token::T::LParen);
      case ')': return punct(Token::T::RParen);
      case ',': return punct(Token::T::Comma);
      case '+': return punct(Token::T::Plus);
      case '-': return punct(Token::T::Minus);
      case '*': return punct(Token::T::Star);
      case '/': return punct(Token::T::Slash);
      case '^': return punct(Token::T::Caret);
      default: break;
    }
    // UTF-8 minus sign U+2212
    if ((unsigned char)c == 0xE2 && pos + 2 < src.size() &&
        (unsigned char)src[pos + 1] == 0x88 && (unsigned char)src[pos + 2] == 0x92) {
      tok.t = Token::T::Minus;
      advance(3, 1);
      return tok;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      const char* begin = src.data() + pos;
      const char* end = src.data() + src.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc{} || ptr == begin) err("malformed number", line, col);
      tok.t = Token::T::Number;
      tok.num = value;
      tok.text.assign(begin, ptr);
      advance(std::size_t(ptr - begin), int(ptr - begin));
      return tok;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      std::size_t n = 0;
      while (pos + n < src.size()) {
        const char d = src[pos + n];
        if ((d >= 'a' && d <= 'z') || (d >= 'A' && d <= 'Z') ||
            (d >= '0' && d <= '9'))
          ++n;
        else
          break;
      }
      tok.t = Token::T::Ident;
      tok.text = src.substr(pos, n);
      advance(n, int(n));
      return tok;
    }
    err(std::string("unexpected character '") + c + "'", line, col);
  }
};

struct Parser {
  Lexer lex;
  Token cur;
  int max_var = -1;

  explicit Parser(const std::string& s) : lex(s) { cur = lex.next(); }

  [[noreturn]] void err(const std::string& msg) const {
    fail(ErrorCode::SyntaxError, msg + " at line " + std::to_string(cur.line) +
                                     ", column " + std::to_string(cur.col));
  }

  void eat(Token::T t, const char* what) {
    if (cur.t != t) err(std::string("expected ") + what);
    cur = lex.next();
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (cur.t == Token::T::Plus || cur.t == Token::T::Minus) {
      const bool add = cur.t == Token::T::Plus;
      cur = lex.next();
      ExprPtr rhs = term();
      ExprNode n;
      n.kind = add ? ExprNode::Kind::Add : ExprNode::Kind::Sub;
      n.a = lhs;
      n.b = rhs;
      lhs = node(std::move(n));
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    while (cur.t == Token::T::Star || cur.t == Token::T::Slash) {
      const bool mul = cur.t == Token::T::Star;
      cur = lex.next();
      ExprPtr rhs = factor();
      ExprNode n;
      n.kind = mul ? ExprNode::Kind::Mul : ExprNode::Kind::Div;
      n.a = lhs;
      n.b = rhs;
      lhs = node(std::move(n));
    }
    return lhs;
  }

  ExprPtr factor() {
    if (cur.t == Token::T::Minus) {
      cur = lex.next();
      ExprPtr inner = factor();
      // fold a minus applied directly to a literal into the literal, so the
      // printed form round-trips to the same tree
      if (inner->kind == ExprNode::Kind::Number) {
        ExprNode n;
        n.kind = ExprNode::Kind::Number;
        n.number = -inner->number;
        return node(std::move(n));
      }
      ExprNode n;
      n.kind = ExprNode::Kind::Neg;
      n.a = inner;
      return node(std::move(n));
    }
    ExprPtr base = primary();
    while (cur.t == Token::T::Caret) {
      cur = lex.next();
      bool negexp = false;
      if (cur.t == Token::T::Minus) {
        negexp = true;
        cur = lex.next();
      }
      if (cur.t != Token::T::Number || cur.num != std::floor(cur.num))
        err("expected integer exponent");
      ExprNode n;
      n.kind = ExprNode::Kind::Pow;
      n.exponent = int(cur.num) * (negexp ? -1 : 1);
      n.a = base;
      cur = lex.next();
      base = node(std::move(n));
    }
    return base;
  }

  ExprPtr primary() {
    if (cur.t == Token::T::Number) {
      ExprNode n;
      n.kind = ExprNode::Kind::Number;
      n.number = cur.num;
      cur = lex.next();
      return node(std::move(n));
    }
    if (cur.t == Token::T::LParen) {
      cur = lex.next();
      ExprPtr inner = expr();
      eat(Token::T::RParen, "')'");
      return inner;
    }
    if (cur.t == Token::T::Ident) {
      const std::string name = cur.text;
      if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '4') {
        ExprNode n;
        n.kind = ExprNode::Kind::Var;
        n.var = name[1] - '1';
        max_var = std::max(max_var, n.var);
        cur = lex.next();
        return node(std::move(n));
      }
      ExprNode::Kind k;
      int args = 1;
      if (name == "sin") k = ExprNode::Kind::Sin;
      else if (name == "cos") k = ExprNode::Kind::Cos;
      else if (name == "sqrt") k = ExprNode::Kind::Sqrt;
      else if (name == "exp") k = ExprNode::Kind::Exp;
      else if (name == "atan2") { k = ExprNode::Kind::Atan2; args = 2; }
      else err("unknown identifier '" + name + "'");
      cur = lex.next();
      eat(Token::T::LParen, "'('");
      ExprNode n;
      n.kind = k;
      n.a = expr();
      if (args == 2) {
        eat(Token::T::Comma, "','");
        n.b = expr();
      }
      eat(Token::T::RParen, "')'");
      return node(std::move(n));
    }
    err("expected a number, variable, function, or '('");
  }
};

int precedence(const ExprNode& e) {
  switch (e.kind) {
    case ExprNode::Kind::Add:
    case ExprNode::Kind::Sub:
      return 1;
    case ExprNode::Kind::Mul:
    case ExprNode::Kind::Div:
    case ExprNode::Kind::Neg:
      return 2;
    case ExprNode::Kind::Pow:
      return 3;
    default:
      return 4;
  }
}

std::string number_text(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_rec(const ExprNode& e, std::string& out) {
  auto child = [&](const ExprNode& c, int minprec) {
    const bool parens = precedence(c) < minprec;
    if (parens) out += '(';
    print_rec(c, out);
    if (parens) out += ')';
  };
  switch (e.kind) {
    case ExprNode::Kind::Number:
      out += number_text(e.number);
      break;
    case ExprNode::Kind::Var:
      out += 'x';
      out += char('1' + e.var);
      break;
    case ExprNode::Kind::Add:
      child(*e.a, 1);
      out += " + ";
      child(*e.b, 2);
      break;
    case ExprNode::Kind::Sub:
      child(*e.a, 1);
      out += " - ";
      // a - (b + c) and a - (b - c) need the guard; so does a - -b
      if (e.b->kind == ExprNode::Kind::Neg || precedence(*e.b) < 2) {
        out += '(';
        print_rec(*e.b, out);
        out += ')';
      } else {
        print_rec(*e.b, out);
      }
      break;
    case ExprNode::Kind::Mul:
      child(*e.a, 2);
      out += '*';
      // the operator is left-associative: parenthesize any bound RHS
      if ((e.b->kind == ExprNode::Kind::Number && e.b->number < 0) ||
          precedence(*e.b) < 3) {
        out += '(';
        print_rec(*e.b, out);
        out += ')';
      } else {
        print_rec(*e.b, out);
      }
      break;
    case ExprNode::Kind::Div:
      child(*e.a, 2);
      out += '/';
      if (precedence(*e.b) <= 2 ||
          (e.b->kind == ExprNode::Kind::Number && e.b->number < 0)) {
        out += '(';
        print_rec(*e.b, out);
        out += ')';
      } else {
        print_rec(*e.b, out);
      }
      break;
    case ExprNode::Kind::Neg:
      out += '-';
      child(*e.a, 3);
      break;
    case ExprNode::Kind::Pow: {
      const bool parens =
          precedence(*e.a) < 4 ||
          (e.a->kind == ExprNode::Kind::Number && e.a->number < 0) ||
          e.a->kind == ExprNode::Kind::Pow;
      if (parens) out += '(';
      print_rec(*e.a, out);
      if (parens) out += ')';
      out += '^';
      out += std::to_string(e.exponent);
      break;
    }
    case ExprNode::Kind::Sin:
    case ExprNode::Kind::Cos:
    case ExprNode::Kind::Sqrt:
    case ExprNode::Kind::Exp: {
      const char* name = e.kind == ExprNode::Kind::Sin    ? "sin"
                         : e.kind == ExprNode::Kind::Cos  ? "cos"
                         : e.kind == ExprNode::Kind::Sqrt ? "sqrt"
                                                          : "exp";
      out += name;
      out += '(';
      print_rec(*e.a, out);
      out += ')';
      break;
    }
    case ExprNode::Kind::Atan2:
      out += "atan2(";
      print_rec(*e.a, out);
      out += ", ";
      print_rec(*e.b, out);
      out += ')';
      break;
  }
}

}  // namespace

double ExprNode::eval(const double* x) const {
  switch (kind) {
    case Kind::Number: return number;
    case Kind::Var: return x[var];
    case Kind::Add: return a->eval(x) + b->eval(x);
    case Kind::Sub: return a->eval(x) - b->eval(x);
    case Kind::Mul: return a->eval(x) * b->eval(x);
    case Kind::Div: return a->eval(x) / b->eval(x);
    case Kind::Pow: return std::pow(a->eval(x), exponent);
    case Kind::Neg: return -a->eval(x);
    case Kind::Sin: return std::sin(a->eval(x));
    case Kind::Cos: return std::cos(a->eval(x));
    case Kind::Sqrt: return std::sqrt(a->eval(x));
    case Kind::Exp: return std::exp(a->eval(x));
    case Kind::Atan2: return std::atan2(a->eval(x), b->eval(x));
  }
  return 0.0;
}

ExprPtr parse_expression(const std::string& text) {
  Parser p(text);
  ExprPtr e = p.expr();
  if (p.cur.t != Token::T::End) p.err("trailing input");
  return e;
}

std::string print_expression(const ExprPtr& e) {
  std::string out;
  print_rec(*e, out);
  return out;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprNode::Kind::Number:
      return a->number == b->number;
    case ExprNode::Kind::Var:
      return a->var == b->var;
    case ExprNode::Kind::Pow:
      return a->exponent == b->exponent && expr_equal(a->a, b->a);
    default:
      return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
  }
}

std::shared_ptr<const MapExpr> MapExpr::parse(const std::string& source, Domain dom) {
  Parser p(source);
  if (p.cur.t != Token::T::LParen)
    p.err("a map starts with '('");
  p.cur = p.lex.next();
  std::vector<ExprPtr> comps;
  comps.push_back(p.expr());
  while (p.cur.t == Token::T::Comma) {
    p.cur = p.lex.next();
    comps.push_back(p.expr());
  }
  p.eat(Token::T::RParen, "')' or ','");
  if (p.cur.t != Token::T::End) p.err("trailing input after map");

  auto m = std::shared_ptr<MapExpr>(new MapExpr());
  m->components_ = std::move(comps);
  m->source_ = source;
  m->domain_ = dom;
  if (dom != Domain::None) {
    const int adim = ambient_dim(dom);
    if (p.max_var >= adim)
      fail(ErrorCode::ArityError,
           std::string("variable x") + std::to_string(p.max_var + 1) +
               " exceeds the " + std::to_string(adim) +
               " coordinate(s) of domain " + domain_name(dom));
    m->in_dim_ = adim;
  } else {
    m->in_dim_ = p.max_var + 1;
  }
  return m;
}

void MapExpr::eval_into(const double* x, double* y) const {
  for (std::size_t c = 0; c < components_.size(); ++c)
    y[c] = components_[c]->eval(x);
}

std::string MapExpr::pretty() const {
  std::string out = "(";
  for (std::size_t c = 0; c < components_.size(); ++c) {
    if (c) out += ", ";
    print_rec(*components_[c], out);
  }
  out += ')';
  return out;
}

}  // namespace stokes
