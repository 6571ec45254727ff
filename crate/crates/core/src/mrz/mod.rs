//! Machine-readable zone: location on the card, TD3 parsing and check digits.
//!
//! Field offsets and the character value table follow the public ICAO 9303
//! TD3 layout (two lines of 44 characters).

mod extract;
mod locate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use extract::{extract_and_parse, extract_lines, ExtractedLines};
pub use locate::{locate_mrz, MrzBand, MrzLocateConfig};

pub const TD3_LINE_LEN: usize = 44;

/// Numeric value of an MRZ character: `<` is 0, digits their face value,
/// `A`..`Z` 10..35.
pub fn mrz_char_value(c: char) -> Result<u32> {
    match c {
        '<' => Ok(0),
        '0'..='9' => Ok(c as u32 - '0' as u32),
        'A'..='Z' => Ok(c as u32 - 'A' as u32 + 10),
        other => Err(Error::Alphabet(other)),
    }
}

pub fn is_mrz_char(c: char) -> bool {
    matches!(c, '<' | '0'..='9' | 'A'..='Z')
}

/// Weighted (7, 3, 1) sum of character values, mod 10.
pub fn check_digit(s: &str) -> Result<u8> {
    const WEIGHTS: [u32; 3] = [7, 3, 1];
    let mut sum = 0u32;
    for (i, c) in s.chars().enumerate() {
        sum += mrz_char_value(c)? * WEIGHTS[i % 3];
    }
    Ok((sum % 10) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    M,
    F,
    Unspecified,
}

impl Sex {
    pub fn to_mrz(self) -> char {
        match self {
            Sex::M => 'M',
            Sex::F => 'F',
            Sex::Unspecified => '<',
        }
    }

    fn from_mrz(c: char) -> Result<Self> {
        match c {
            'M' => Ok(Sex::M),
            'F' => Ok(Sex::F),
            '<' | 'X' => Ok(Sex::Unspecified),
            other => Err(Error::MrzStructure(format!("sex field {other:?}"))),
        }
    }
}

/// The data fields of a TD3 zone, without check digits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrzFields {
    pub doc_type: String,
    pub issuing_state: String,
    pub surname: String,
    pub given_names: String,
    pub doc_number: String,
    pub nationality: String,
    pub birth_date: String,
    pub sex: Sex,
    pub expiry_date: String,
    pub personal_number: String,
}

impl MrzFields {
    /// The ICAO specimen passport holder.
    pub fn specimen() -> Self {
        MrzFields {
            doc_type: "P".into(),
            issuing_state: "UTO".into(),
            surname: "ERIKSSON".into(),
            given_names: "ANNA MARIA".into(),
            doc_number: "L898902C3".into(),
            nationality: "UTO".into(),
            birth_date: "740812".into(),
            sex: Sex::F,
            expiry_date: "120415".into(),
            personal_number: "ZE184226B".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub expected: u8,
    pub found: char,
    pub pass: bool,
}

impl CheckVerdict {
    fn new(expected: u8, found: char) -> Self {
        // An empty optional field may carry '<' in place of 0.
        let pass = match found {
            '0'..='9' => found as u8 - b'0' == expected,
            '<' => expected == 0,
            _ => false,
        };
        CheckVerdict {
            expected,
            found,
            pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    pub doc_number: CheckVerdict,
    pub birth: CheckVerdict,
    pub expiry: CheckVerdict,
    pub personal: CheckVerdict,
    pub composite: CheckVerdict,
}

impl Checks {
    pub fn all_pass(&self) -> bool {
        self.iter().all(|(_, v)| v.pass)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &CheckVerdict)> {
        [
            ("doc_number", &self.doc_number),
            ("birth", &self.birth),
            ("expiry", &self.expiry),
            ("personal", &self.personal),
            ("composite", &self.composite),
        ]
        .into_iter()
    }
}

/// A parsed TD3 zone with every check-digit verdict retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrzRecord {
    #[serde(flatten)]
    pub fields: MrzFields,
    pub checks: Checks,
    pub raw_lines: [String; 2],
}

fn validate_line(line: &str, len: usize) -> Result<()> {
    if line.chars().count() != len {
        return Err(Error::MrzStructure(format!(
            "line of {} characters, expected {len}",
            line.chars().count()
        )));
    }
    if let Some(c) = line.chars().find(|&c| !is_mrz_char(c)) {
        return Err(Error::MrzStructure(format!(
            "character {c:?} outside the MRZ alphabet"
        )));
    }
    Ok(())
}

fn unpad(s: &str) -> String {
    s.trim_end_matches('<').replace('<', " ")
}

/// Parses a zone of any size class; only TD3 (two 44-character lines) is
/// supported.
pub fn parse_lines<S: AsRef<str>>(lines: &[S]) -> Result<MrzRecord> {
    match lines {
        [a, b] => parse_td3(a.as_ref(), b.as_ref()),
        [_, _, _] => Err(Error::Unsupported("three-line (TD1) zones".into())),
        other => Err(Error::MrzStructure(format!(
            "{} lines, expected 2",
            other.len()
        ))),
    }
}

/// Parses the two TD3 lines. Check-digit mismatches are recorded in the
/// verdicts; only structural defects are errors.
pub fn parse_td3(line1: &str, line2: &str) -> Result<MrzRecord> {
    validate_line(line1, TD3_LINE_LEN)?;
    validate_line(line2, TD3_LINE_LEN)?;
    let (l1, l2) = (line1.as_bytes(), line2.as_bytes());
    let field = |l: &[u8], a: usize, b: usize| std::str::from_utf8(&l[a..b]).unwrap().to_string();
    let digit = |i: usize| l2[i] as char;

    let names = &line1[5..];
    let (surname, given) = match names.find("<<") {
        Some(i) => (&names[..i], &names[i + 2..]),
        None => (names, ""),
    };
    let check = |s: &str| check_digit(s).expect("validated alphabet");

    let composite_src = format!("{}{}{}", &line2[0..10], &line2[13..20], &line2[21..43]);
    let checks = Checks {
        doc_number: CheckVerdict::new(check(&line2[0..9]), digit(9)),
        birth: CheckVerdict::new(check(&line2[13..19]), digit(19)),
        expiry: CheckVerdict::new(check(&line2[21..27]), digit(27)),
        personal: CheckVerdict::new(check(&line2[28..42]), digit(42)),
        composite: CheckVerdict::new(check(&composite_src), digit(43)),
    };

    let fields = MrzFields {
        doc_type: unpad(&field(l1, 0, 2)),
        issuing_state: unpad(&field(l1, 2, 5)),
        surname: unpad(surname).trim().to_string(),
        given_names: unpad(given).trim().to_string(),
        doc_number: unpad(&field(l2, 0, 9)),
        nationality: unpad(&field(l2, 10, 13)),
        birth_date: field(l2, 13, 19),
        sex: Sex::from_mrz(digit(20))?,
        expiry_date: field(l2, 21, 27),
        personal_number: unpad(&field(l2, 28, 42)),
    };
    Ok(MrzRecord {
        fields,
        checks,
        raw_lines: [line1.to_string(), line2.to_string()],
    })
}

fn pad(s: &str, len: usize, what: &str) -> Result<String> {
    let enc = s.trim().replace(' ', "<");
    if let Some(c) = enc.chars().find(|&c| !is_mrz_char(c)) {
        return Err(Error::Spec(format!(
            "{what}: character {c:?} outside the MRZ alphabet"
        )));
    }
    if enc.len() > len {
        return Err(Error::Spec(format!("{what} longer than {len} characters")));
    }
    Ok(format!("{enc:<<len$}"))
}

/// Renders fields into the two TD3 lines with all five check digits.
pub fn gen_mrz_lines(f: &MrzFields) -> Result<[String; 2]> {
    let mut names = pad(&f.surname, 39, "surname")?
        .trim_end_matches('<')
        .to_string();
    if !f.given_names.trim().is_empty() {
        names.push_str("<<");
        names.push_str(pad(&f.given_names, 39, "given names")?.trim_end_matches('<'));
    }
    let line1 = format!(
        "{}{}{}",
        pad(&f.doc_type, 2, "document type")?,
        pad(&f.issuing_state, 3, "issuing state")?,
        pad(&names, 39, "names")?
    );

    for (d, what) in [
        (&f.birth_date, "birth date"),
        (&f.expiry_date, "expiry date"),
    ] {
        if d.len() != 6 || !d.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Spec(format!("{what} {d:?} is not YYMMDD")));
        }
    }
    let doc = pad(&f.doc_number, 9, "document number")?;
    let personal = pad(&f.personal_number, 14, "personal number")?;
    let d = |s: &str| check_digit(s).expect("padded fields are alphabet-valid");
    let mut line2 = format!(
        "{doc}{}{}{}{}{}{}{}{personal}{}",
        d(&doc),
        pad(&f.nationality, 3, "nationality")?,
        f.birth_date,
        d(&f.birth_date),
        f.sex.to_mrz(),
        f.expiry_date,
        d(&f.expiry_date),
        d(&personal),
    );
    let composite = format!("{}{}{}", &line2[0..10], &line2[13..20], &line2[21..43]);
    line2.push_str(&d(&composite).to_string());
    Ok([line1, line2])
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SPECIMEN_1: &str = "P<UTOERIKSSON<<ANNA<MARIA<<<<<<<<<<<<<<<<<<<";
    pub(crate) const SPECIMEN_2: &str = "L898902C36UTO7408122F1204159ZE184226B<<<<<10";

    #[test]
    fn char_values() {
        assert_eq!(mrz_char_value('<').unwrap(), 0);
        assert_eq!(mrz_char_value('7').unwrap(), 7);
        assert_eq!(mrz_char_value('A').unwrap(), 10);
        assert_eq!(mrz_char_value('Z').unwrap(), 35);
        assert!(matches!(mrz_char_value('a'), Err(Error::Alphabet('a'))));
    }

    #[test]
    fn check_digit_examples() {
        assert_eq!(check_digit("<<<<<<").unwrap(), 0);
        assert_eq!(check_digit("111").unwrap(), 1);
        assert_eq!(check_digit("L898902C3").unwrap(), 6);
        assert_eq!(check_digit("740812").unwrap(), 2);
        assert_eq!(check_digit("120415").unwrap(), 9);
        assert!(check_digit("AB-").is_err());
    }

    #[test]
    fn specimen_parses() {
        let r = parse_td3(SPECIMEN_1, SPECIMEN_2).unwrap();
        assert_eq!(r.fields, MrzFields::specimen());
        assert!(r.checks.all_pass());
    }

    #[test]
    fn altered_check_digit_is_data_not_error() {
        let bad = SPECIMEN_2.replacen("L898902C36", "L898902C37", 1);
        let r = parse_td3(SPECIMEN_1, &bad).unwrap();
        assert!(!r.checks.doc_number.pass);
        assert_eq!(r.checks.doc_number.expected, 6);
        assert_eq!(r.checks.doc_number.found, '7');
        assert!(r.checks.birth.pass && r.checks.expiry.pass && r.checks.personal.pass);
        assert!(!r.checks.composite.pass);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_td3(&SPECIMEN_1[..43], SPECIMEN_2),
            Err(Error::MrzStructure(_))
        ));
        let lower = SPECIMEN_2.replacen('L', "l", 1);
        assert!(matches!(
            parse_td3(SPECIMEN_1, &lower),
            Err(Error::MrzStructure(_))
        ));
        assert!(matches!(
            parse_lines(&[SPECIMEN_1]),
            Err(Error::MrzStructure(_))
        ));
        assert!(matches!(
            parse_lines(&[SPECIMEN_1, SPECIMEN_2, SPECIMEN_2]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn generator_reproduces_specimen() {
        let [a, b] = gen_mrz_lines(&MrzFields::specimen()).unwrap();
        assert_eq!(a, SPECIMEN_1);
        assert_eq!(b, SPECIMEN_2);
    }

    #[test]
    fn empty_personal_number() {
        let mut f = MrzFields::specimen();
        f.personal_number.clear();
        let [_, b] = gen_mrz_lines(&f).unwrap();
        assert_eq!(&b[28..42], "<<<<<<<<<<<<<<");
        assert_eq!(&b[42..43], "0");
        assert!(parse_td3(&gen_mrz_lines(&f).unwrap()[0], &b)
            .unwrap()
            .checks
            .all_pass());
    }

    #[test]
    fn overlong_fields_rejected() {
        let mut f = MrzFields::specimen();
        f.doc_number = "1234567890".into();
        assert!(matches!(gen_mrz_lines(&f), Err(Error::Spec(_))));
        let mut f = MrzFields::specimen();
        f.surname = "A".repeat(40);
        assert!(matches!(gen_mrz_lines(&f), Err(Error::Spec(_))));
    }
}
