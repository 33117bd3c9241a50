# data/default_configs.py

# 十档字母评级到分数的映射，D 为最棕，AAA 为最绿
RATING_LETTER_MAP = {
    "AAA": 10,
    "AA": 9,
    "A": 8,
    "BBB": 7,
    "BB": 6,
    "B": 5,
    "CCC": 4,
    "CC": 3,
    "C": 2,
    "D": 1,
}

# 评级文件的列名
RATINGS_COLUMNS = ("date", "company", "rating")

# 价格与利率文件的列名
PRICES_COLUMNS = ("date", "ticker", "adj_close")
RATES_COLUMNS = ("date", "yield_annualized")
