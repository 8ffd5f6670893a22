"""Hand-written normalization cases: (input, expected output)."""

GOLDEN = [
    # basic mixed cases
    ("Check this 😂 https://t.co/abc #Breaking", "Check this face with tears of joy URL HASHTAG"),
    ("India reports its first confirmed coronavirus case", "India reports its first confirmed coronavirus case"),
    ("@WHO 😂😂", "@USER face with tears of joy face with tears of joy"),
    # empty / whitespace
    ("", ""),
    ("   \t\n ", ""),
    ("  spaced   out\ttext \n", "spaced out text"),
    # emoji
    ("I ❤️ NY", "I red heart NY"),
    ("great👍", "great thumbs up"),
    ("👍🏽", "thumbs up medium skin tone"),
    ("🇺🇸 election", "united states election"),
    ("family: 👨‍👩‍👧", "family: family man woman girl"),
    ("#️⃣", "keycap number sign"),
    ("stray selector ️ here", "stray selector here"),
    ("Breaking 🔴 LIVE", "Breaking red circle LIVE"),
    # urls
    ("read https://example.com/a?b=c now", "read URL now"),
    ("HTTP://EXAMPLE.COM", "URL"),
    ("see www.who.int/news.", "see URL"),
    ("t.co/xYz123 and http://bit.ly/q", "URL and URL"),
    ("(https://x.org/p)", "(URL"),
    ("no url in e.g. this.com", "no url in e.g. this.com"),
    # hashtags
    ("#COVID19 is #1", "HASHTAG is HASHTAG"),
    ("stay safe #StayHome!", "stay safe HASHTAG!"),
    ("(#tag)", "(HASHTAG)"),
    ("C# and a#b stay", "C# and a#b stay"),
    ("# alone", "# alone"),
    # mentions
    ("thanks @user_1, and @Other", "thanks @USER, and @USER"),
    ("mail me at someone@example.com", "mail me at someone@example.com"),
    # mixed
    ("@CDCgov: 🚨 New data https://t.co/AbC #COVID19 #vaccine 💉",
     "@USER: police car light New data URL HASHTAG HASHTAG syringe"),
    ("RT @news #Breaking:https://t.co/z", "RT @USER HASHTAG:URL"),
    ("#https://t.co/x", "HASHTAG"),
]
