//! The target-set mini-language:
//! `nat | odd | mod:M:r1,r2 | list:a,b | form:b1,b2`, followed by any number
//! of `+include:a,b` and `+exclude:a,b` overlays.

use std::fmt;

use crate::escalator::TargetSet;
use crate::triangular::TriangularForm;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the source text.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "set spec error at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { position: self.pos, message: message.into() })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        let hit = self.rest().starts_with(token);
        if hit {
            self.pos += token.len();
        }
        hit
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            self.fail(format!("expected '{token}'"))
        }
    }

    fn number(&mut self) -> Result<u64, ParseError> {
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return self.fail("expected a number");
        }
        let value = self.rest()[..digits].parse().or_else(|_| self.fail("number out of range"))?;
        self.pos += digits;
        Ok(value)
    }

    /// A possibly empty comma-separated list ending at `+` or end of input.
    fn numbers(&mut self) -> Result<Vec<u64>, ParseError> {
        let mut out = Vec::new();
        if self.rest().is_empty() || self.rest().starts_with('+') {
            return Ok(out);
        }
        loop {
            out.push(self.number()?);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn at_overlay_or_end(&self) -> Result<(), ParseError> {
        if self.rest().is_empty() || self.rest().starts_with('+') {
            Ok(())
        } else {
            self.fail("unexpected character")
        }
    }
}

pub fn parse_set(text: &str) -> Result<TargetSet, ParseError> {
    let mut cur = Cursor { text, pos: 0 };
    let mut set = if cur.eat("nat") {
        TargetSet::naturals()
    } else if cur.eat("odd") {
        TargetSet::odd()
    } else if cur.eat("mod:") {
        let at = cur.pos;
        let modulus = cur.number()?;
        if modulus == 0 {
            return Err(ParseError { position: at, message: "modulus must be positive".into() });
        }
        cur.expect(":")?;
        let at = cur.pos;
        let residues = cur.numbers()?;
        if let Some(r) = residues.iter().find(|&&r| r >= modulus) {
            return Err(ParseError { position: at, message: format!("residue {r} not below {modulus}") });
        }
        TargetSet::residues(modulus, residues)
    } else if cur.eat("list:") {
        TargetSet::list(cur.numbers()?)
    } else if cur.eat("form:") {
        let at = cur.pos;
        let coeffs = cur.numbers()?;
        if coeffs.is_empty() {
            return cur.fail("form needs at least one coefficient");
        }
        let form = TriangularForm::from_unsorted(coeffs)
            .map_err(|e| ParseError { position: at, message: e.to_string() })?;
        TargetSet::form_image(form)
    } else {
        return cur.fail("expected nat, odd, mod:, list: or form:");
    };
    cur.at_overlay_or_end()?;
    while cur.eat("+") {
        if cur.eat("include:") {
            set = set.with_include(cur.numbers()?);
        } else if cur.eat("exclude:") {
            set = set.with_exclude(cur.numbers()?);
        } else {
            return cur.fail("expected include: or exclude:");
        }
        cur.at_overlay_or_end()?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escalator::SetKind;

    #[test]
    fn examples() {
        assert_eq!(parse_set("odd").unwrap(), TargetSet::odd());
        assert_eq!(
            parse_set("form:2,3,4").unwrap().kind(),
            &SetKind::FormImage("2,3,4".parse().unwrap())
        );
        assert_eq!(parse_set("mod:9:2,8").unwrap(), TargetSet::residues(9, [2, 8]));
        assert_eq!(
            parse_set("list:3,1+include:7+exclude:3").unwrap(),
            TargetSet::list([1, 3]).with_include([7]).with_exclude([3])
        );
    }

    #[test]
    fn errors_have_positions() {
        let err = |s: &str| parse_set(s).unwrap_err().position;
        assert_eq!(err("even"), 0);
        assert_eq!(err("form:"), 5);
        assert_eq!(err("mod:9:2,x"), 8);
        assert_eq!(err("mod:9:12"), 6);
        assert_eq!(err("mod:0:0"), 4);
        assert_eq!(err("odd+keep:1"), 4);
        assert_eq!(err("odd,"), 3);
        assert_eq!(err("form:1,0"), 5);
    }

    #[test]
    fn display_parses_back() {
        for text in ["nat", "odd", "mod:9:2,8", "list:1,5,9", "form:2,3,4", "odd+include:2+exclude:5"] {
            let set = parse_set(text).unwrap();
            assert_eq!(parse_set(&set.to_string()).unwrap(), set, "{text}");
        }
    }
}
